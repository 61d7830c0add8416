//! JSON run configuration. Unknown keys are rejected at every level.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::convexity::{BoundaryGraph, Curve, FigureOptions, Profile};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, PresetTag, Shape};
use crate::nonlinearity::NonlinearitySpec;
use crate::solver::RadialDomain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub preset: PresetTag,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub grid_h: f64,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiskParams {
    #[serde(default)]
    center: Point,
    #[serde(default = "one")]
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnulusParams {
    #[serde(default)]
    center: Point,
    #[serde(default = "one")]
    inner: f64,
    #[serde(default = "two")]
    outer: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SquareParams {
    #[serde(default)]
    min: Point,
    #[serde(default = "one")]
    side: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolygonParams {
    vertices: Vec<Point>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn params<T: for<'de> Deserialize<'de>>(preset: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("{preset} params: {e}")))
}

impl DomainConfig {
    /// Builds the domain and the same configuration with every default filled in.
    pub fn resolve(&self) -> Result<(Domain, DomainConfig)> {
        let (shape, rho_default, normalized) = match self.preset {
            PresetTag::Disk => {
                let p: DiskParams = params("disk", &self.params)?;
                (
                    Shape::Disk {
                        center: p.center,
                        radius: p.radius,
                    },
                    Some(p.radius),
                    json!({"center": p.center, "radius": p.radius}),
                )
            }
            PresetTag::Annulus => {
                let p: AnnulusParams = params("annulus", &self.params)?;
                (
                    Shape::Annulus {
                        center: p.center,
                        inner: p.inner,
                        outer: p.outer,
                    },
                    Some(0.5 * p.inner),
                    json!({"center": p.center, "inner": p.inner, "outer": p.outer}),
                )
            }
            PresetTag::Square => {
                let p: SquareParams = params("square", &self.params)?;
                (
                    Shape::Rectangle {
                        min: p.min,
                        max: [p.min[0] + p.side, p.min[1] + p.side],
                    },
                    Some(p.side),
                    json!({"min": p.min, "side": p.side}),
                )
            }
            PresetTag::GraphBoundary | PresetTag::Custom => {
                let p: PolygonParams = params("polygon", &self.params)?;
                let normalized = json!({"vertices": p.vertices});
                (Shape::Polygon { vertices: p.vertices }, None, normalized)
            }
        };
        let rho = self
            .rho
            .or(rho_default)
            .ok_or_else(|| Error::Config("rho is required for polygonal presets".into()))?;
        let domain = Domain::new(self.preset, shape, rho, self.grid_h)?;
        Ok((
            domain,
            DomainConfig {
                preset: self.preset,
                params: normalized,
                rho: Some(rho),
                grid_h: self.grid_h,
            },
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Damped Newton on the planar grid.
    #[default]
    Grid,
    /// Radial shooting in dimension `N`, sampled onto the grid.
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: SolveMethod,
    /// Grid spacing; defaults to the domain's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub tol: f64,
    pub eigen_tol: f64,
    /// Multiples of the max-normalized eigenfunction tried as initial guesses.
    pub init_amplitudes: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolveMethod::Grid,
            h: None,
            tol: 1e-10,
            eigen_tol: 1e-12,
            init_amplitudes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsConfig {
    pub directions: usize,
    pub tol: f64,
}

impl Default for CapsConfig {
    fn default() -> Self {
        CapsConfig {
            directions: 64,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KelvinConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Tolerance on the transformed PDE residual, relative to `max |Δv|`.
    pub residual_tol: f64,
}

impl Default for KelvinConfig {
    fn default() -> Self {
        KelvinConfig {
            base_point: None,
            rho: None,
            residual_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    CapMonotonicity,
    MaxLocation,
    GlobalBound,
    KelvinNoCritical,
    GReflection,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::CapMonotonicity,
        CheckKind::MaxLocation,
        CheckKind::GlobalBound,
        CheckKind::KelvinNoCritical,
        CheckKind::GReflection,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    pub list: Vec<CheckKind>,
    pub directions: usize,
    pub lambda_samples: usize,
    /// Pointwise tolerance; defaults to `5 h ||∇u||_inf`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub delta: f64,
    /// Overrides `C = (R / rho)^{N-2}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_constant: Option<f64>,
    pub theta: f64,
    pub g_samples: usize,
    pub s_range: (f64, f64),
    pub g_tolerance: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            list: CheckKind::ALL.to_vec(),
            directions: 64,
            lambda_samples: 16,
            tolerance: None,
            delta: 0.1,
            bound_constant: None,
            theta: 1e-3,
            g_samples: 1000,
            s_range: (1e-3, 1e3),
            g_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixConfig {
    pub curve: Curve,
    pub figure: FigureOptions,
    pub profiles: Vec<BoundaryGraph>,
    /// Fixed `delta'`; searched per profile when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_prime: Option<f64>,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        let g = |profile, radius| BoundaryGraph { profile, radius };
        AppendixConfig {
            curve: Curve::Gamma2,
            figure: FigureOptions::default(),
            profiles: vec![
                g(Profile::Constant { dim: 1 }, 1.0),
                g(Profile::Quadratic { matrix: vec![vec![0.5]] }, 1.0),
                g(Profile::Quartic { dim: 1 }, 1.0),
                g(Profile::Gamma1, 0.5),
                g(Profile::Gamma2, 0.01),
            ],
            delta_prime: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinConfig {
    pub s_max: f64,
    pub samples: usize,
    /// Principal eigenvalue for H3; computed on the domain when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
}

impl Default for NonlinConfig {
    fn default() -> Self {
        NonlinConfig {
            s_max: 1e6,
            samples: 200,
            lambda1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundednessConfig {
    pub dim: u32,
    pub domain: RadialDomain,
    pub family: Vec<NonlinearitySpec>,
    #[serde(default = "tenth")]
    pub delta: f64,
}

fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub caps: CapsConfig,
    #[serde(default)]
    pub kelvin: KelvinConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub appendix: AppendixConfig,
    #[serde(default)]
    pub nonlin: NonlinConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundedness: Option<BoundednessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.domain.grid_h > 0.0 && self.domain.grid_h.is_finite()) {
            return bad("domain.grid_h must be positive");
        }
        if let Some(h) = self.solver.h {
            if !(h > 0.0 && h.is_finite()) {
                return bad("solver.h must be positive");
            }
        }
        if !(self.solver.tol > 0.0) || !(self.solver.eigen_tol > 0.0) {
            return bad("solver tolerances must be positive");
        }
        if self.caps.directions < 4 || self.checks.directions < 1 {
            return bad("at least 4 cap directions and 1 check direction are required");
        }
        if !(self.checks.delta >= 0.0) || !(self.checks.theta >= 0.0) {
            return bad("checks.delta and checks.theta must be nonnegative");
        }
        Ok(())
    }

    /// Configuration with every default made explicit.
    pub fn effective(&self) -> Result<RunConfig> {
        let (_, domain) = self.domain.resolve()?;
        let mut out = self.clone();
        out.domain = domain;
        out.solver.h = Some(self.grid_h());
        Ok(out)
    }

    pub fn grid_h(&self) -> f64 {
        self.solver.h.unwrap_or(self.domain.grid_h)
    }
}

/// Radial domain matching a centered disk or annulus.
pub fn radial_domain(shape: &Shape) -> Result<(RadialDomain, Point)> {
    match *shape {
        Shape::Disk { center, radius } => Ok((RadialDomain::Ball { radius }, center)),
        Shape::Annulus { center, inner, outer } => Ok((RadialDomain::Annulus { inner, outer }, center)),
        _ => Err(Error::Config("radial solves need a disk or annulus preset".into())),
    }
}
