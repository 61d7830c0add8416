//! Subcommand drivers: configuration in, reports and artifacts out.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::config::{radial_domain, CheckKind, RunConfig, SolveMethod};
use crate::convexity::{certify, figure_curves, second_difference_at_origin, Curve};
use crate::error::{Error, Result};
use crate::geometry::{optimal_cap_set, Domain, Point, Shape};
use crate::grid::{GridFunction, ScalarField};
use crate::kelvin::{build_frame, check_kelvin_pde, image_domain, image_spacing, kelvin_transform, KelvinFrame};
use crate::nonlinearity::{check_hypotheses, Nonlinearity};
use crate::report::{render_text, Artifact};
use crate::solver::{
    amplitude_ladder, principal_eigenpair, solve_radial, solve_with_amplitudes, RadialField, RadialSolution,
};
use crate::verify::{
    bound_constant, boundedness_experiment, check_cap_monotonicity_all, check_g_reflection, check_global_bound,
    check_kelvin_no_critical, check_max_location, default_tolerance, image_cap, CheckReport, GReflectionOptions,
    MonotonicityOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Caps,
    Eigen,
    Solve,
    Kelvin,
    Verify,
    Appendix,
    Nonlin,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Caps,
        Subcommand::Eigen,
        Subcommand::Solve,
        Subcommand::Kelvin,
        Subcommand::Verify,
        Subcommand::Appendix,
        Subcommand::Nonlin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Caps => "caps",
            Subcommand::Eigen => "eigen",
            Subcommand::Solve => "solve",
            Subcommand::Kelvin => "kelvin",
            Subcommand::Verify => "verify",
            Subcommand::Appendix => "appendix",
            Subcommand::Nonlin => "nonlin",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// Result of one run. `pass` is false when a requested check failed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub subcommand: Subcommand,
    pub pass: bool,
    pub artifacts: Vec<Artifact>,
}

/// Runs a subcommand. The first artifact is always the effective config.
pub fn run(sub: Subcommand, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let eff = cfg.effective()?;
    let mut artifacts = vec![Artifact::json("effective_config.json", &eff)?];
    let h = eff.grid_h();
    let (domain, _) = eff.domain.resolve()?;
    let domain = domain.with_grid_h(h)?;
    let pass = match sub {
        Subcommand::Caps => run_caps(&eff, &domain, &mut artifacts)?,
        Subcommand::Eigen => run_eigen(&eff, &domain, &mut artifacts)?,
        Subcommand::Solve => run_solve(&eff, &domain, &mut artifacts)?,
        Subcommand::Kelvin => run_kelvin(&eff, &domain, &mut artifacts)?,
        Subcommand::Verify => run_verify(&eff, &domain, &mut artifacts)?,
        Subcommand::Appendix => run_appendix(&eff, &mut artifacts)?,
        Subcommand::Nonlin => run_nonlin(&eff, &domain, &mut artifacts)?,
    };
    Ok(RunOutcome {
        subcommand: sub,
        pass,
        artifacts,
    })
}

fn nonlinearity(cfg: &RunConfig) -> Result<Nonlinearity> {
    cfg.nonlinearity
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs a \"nonlinearity\" section".into()))?
        .build()
}

fn run_caps(cfg: &RunConfig, domain: &Domain, out: &mut Vec<Artifact>) -> Result<bool> {
    let star = optimal_cap_set(domain, cfg.caps.directions, cfg.caps.tol)?;
    out.push(Artifact::json(
        "caps.json",
        &json!({
            "h": domain.grid_h,
            "directions": cfg.caps.directions,
            "lambda_star_e1": star.caps[0].lambda_star,
            "caps": star.caps,
            "cap_set_nodes": star.mask.count(),
            "complement_nodes": star.complement.count(),
        }),
    )?);
    out.push(Artifact::new("optimal_cap_set.mask", star.mask.to_text()));
    out.push(Artifact::new("complement.mask", star.complement.to_text()));
    Ok(true)
}

fn run_eigen(cfg: &RunConfig, domain: &Domain, out: &mut Vec<Artifact>) -> Result<bool> {
    let pair = principal_eigenpair(domain, domain.grid_h, cfg.solver.eigen_tol)?;
    out.push(Artifact::json("eigen.json", &pair.summary())?);
    out.push(Artifact::new("phi1.grid", pair.phi.to_text()));
    Ok(true)
}

/// A computed positive solution on the grid, with its radial profile when
/// it came from shooting.
pub struct Solution {
    pub u: GridFunction,
    pub radial: Option<(RadialSolution, Point)>,
    pub info: serde_json::Value,
}

impl Solution {
    /// Exact profile when available, else the grid function.
    pub fn field(&self) -> Box<dyn ScalarField + '_> {
        match &self.radial {
            Some((profile, center)) => Box::new(RadialField {
                profile,
                center: *center,
            }),
            None => Box::new(&self.u),
        }
    }
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn value(&self, x: Point) -> Option<f64> {
        (**self).value(x)
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        (**self).gradient(x)
    }
}

pub fn solve(cfg: &RunConfig, domain: &Domain, f: &Nonlinearity) -> Result<Solution> {
    let h = domain.grid_h;
    match cfg.solver.method {
        SolveMethod::Grid => {
            let pair = principal_eigenpair(domain, h, cfg.solver.eigen_tol)?;
            let ladder = if cfg.solver.init_amplitudes.is_empty() {
                amplitude_ladder(1.0, 9)
            } else {
                cfg.solver.init_amplitudes.clone()
            };
            let (u, stats, amplitude) = solve_with_amplitudes(domain, f, &pair.phi, &ladder, cfg.solver.tol)?;
            let (_, max) = u.max_interior().unwrap_or((0, f64::NAN));
            Ok(Solution {
                info: json!({
                    "method": "grid",
                    "nonlinearity": f.label,
                    "h": h,
                    "lambda1": pair.lambda,
                    "amplitude": amplitude,
                    "max": max,
                    "newton": stats,
                }),
                u,
                radial: None,
            })
        }
        SolveMethod::Radial => {
            let (rd, center) = radial_domain(&domain.shape)?;
            let profile = solve_radial(f.dim, f, rd, cfg.solver.tol)?;
            let field = RadialField {
                profile: &profile,
                center,
            };
            let u = domain.sample(h, |x| field.value(x).unwrap_or(0.0))?;
            let (r_max, max) = profile.max();
            let info = json!({
                "method": "radial",
                "nonlinearity": f.label,
                "dim": f.dim,
                "h": h,
                "domain": rd,
                "shooting_parameter": profile.shooting_parameter,
                "boundary_residual": profile.boundary_residual,
                "max": max,
                "argmax": profile.argmax(),
                "max_sample_radius": r_max,
            });
            Ok(Solution {
                u,
                radial: Some((profile, center)),
                info,
            })
        }
    }
}

fn run_solve(cfg: &RunConfig, domain: &Domain, out: &mut Vec<Artifact>) -> Result<bool> {
    let f = nonlinearity(cfg)?;
    let sol = solve(cfg, domain, &f)?;
    out.push(Artifact::json("solution.json", &sol.info)?);
    out.push(Artifact::new("u.grid", sol.u.to_text()));
    if let Some((profile, _)) = &sol.radial {
        out.push(Artifact::new("radial.csv", profile.to_csv()));
    }
    Ok(true)
}

fn base_point(cfg: &RunConfig, domain: &Domain) -> Result<Point> {
    if let Some(p) = cfg.kelvin.base_point {
        return Ok(p);
    }
    match domain.shape {
        Shape::Disk { center, radius } => Ok([center[0] + radius, center[1]]),
        Shape::Annulus { center, inner, .. } => Ok([center[0] + inner, center[1]]),
        _ => Err(Error::Config("kelvin.base_point is required for this preset".into())),
    }
}

fn frame(cfg: &RunConfig, domain: &Domain) -> Result<KelvinFrame> {
    build_frame(domain, base_point(cfg, domain)?, cfg.kelvin.rho.unwrap_or(domain.rho))
}

fn run_kelvin(cfg: &RunConfig, domain: &Domain, out: &mut Vec<Artifact>) -> Result<bool> {
    let f = nonlinearity(cfg)?;
    if cfg.solver.method != SolveMethod::Radial {
        return Err(Error::Config(
            "kelvin needs solver.method = \"radial\": planar grid solutions are not N-dimensional fields".into(),
        ));
    }
    let sol = solve(cfg, domain, &f)?;
    let fr = frame(cfg, domain)?;
    let h = domain.grid_h;
    let field = sol.field();
    let img = kelvin_transform(field.as_ref(), domain, &fr, f.dim, h)?;
    let pde = check_kelvin_pde(field.as_ref(), domain, &f, &fr, f.dim, h, cfg.kelvin.residual_tol)?;
    out.push(Artifact::json(
        "kelvin.json",
        &json!({
            "frame": fr,
            "solution": sol.info,
            "image": {
                "h": img.v.grid.h,
                "valid_nodes": img.valid_nodes().count(),
                "invalid_nodes": img.invalid_count(),
                "inner_radius": img.inner_radius,
            },
            "residual": pde,
            "pass": pde.pass,
        }),
    )?);
    out.push(Artifact::new("v.grid", img.v.to_text()));
    Ok(pde.pass)
}

fn run_verify(cfg: &RunConfig, domain: &Domain, out: &mut Vec<Artifact>) -> Result<bool> {
    let f = nonlinearity(cfg)?;
    let sol = solve(cfg, domain, &f)?;
    let u = &sol.u;
    let checks = &cfg.checks;
    let tol = checks.tolerance.unwrap_or_else(|| default_tolerance(u));
    let mut reports: Vec<CheckReport> = Vec::new();
    let mut skipped: Vec<serde_json::Value> = Vec::new();
    let mut kinds = checks.list.clone();
    kinds.dedup();
    for kind in kinds {
        let needs_n = matches!(kind, CheckKind::KelvinNoCritical | CheckKind::GReflection);
        if needs_n && f.dim < 3 {
            skipped.push(json!({"check": kind, "reason": "needs N >= 3"}));
            continue;
        }
        if kind == CheckKind::KelvinNoCritical && sol.radial.is_none() {
            skipped.push(json!({"check": kind, "reason": "needs a radial (N-dimensional) solution"}));
            continue;
        }
        let report = match kind {
            CheckKind::CapMonotonicity => {
                let opts = MonotonicityOptions {
                    lambda_samples: checks.lambda_samples,
                    tolerance: Some(tol),
                };
                check_cap_monotonicity_all(u, domain, checks.directions, &opts)?
            }
            CheckKind::MaxLocation => {
                let star = optimal_cap_set(domain, cfg.caps.directions, cfg.caps.tol)?;
                check_max_location(u, &star.complement, tol)?
            }
            CheckKind::GlobalBound => {
                let c = match checks.bound_constant {
                    Some(c) => c,
                    None => bound_constant(&frame(cfg, domain)?, f.dim),
                };
                check_global_bound(u, domain, checks.delta, c)?
            }
            CheckKind::KelvinNoCritical => {
                let field = sol.field();
                let rho = cfg.kelvin.rho.unwrap_or(domain.rho);
                check_kelvin_no_critical(
                    field.as_ref(),
                    domain,
                    base_point(cfg, domain)?,
                    rho,
                    f.dim,
                    domain.grid_h,
                    checks.theta,
                )?
            }
            CheckKind::GReflection => {
                let fr = frame(cfg, domain)?;
                let image = image_domain(domain, &fr, image_spacing(domain, &fr, domain.grid_h)?)?;
                let cap = image_cap(&image)?;
                let opts = GReflectionOptions {
                    samples: checks.g_samples,
                    seed: cfg.seed,
                    s_range: checks.s_range,
                    tolerance: checks.g_tolerance,
                };
                check_g_reflection(&f, &fr, &image, &cap, f.dim, &opts)?
            }
        };
        reports.push(report);
    }
    let pass = reports.iter().all(|r| r.pass);
    out.push(Artifact::json(
        "verify.json",
        &json!({
            "solution": sol.info,
            "checks": reports,
            "skipped": skipped,
            "pass": pass,
        }),
    )?);
    out.push(Artifact::new("verify.txt", render_text(&reports)));
    Ok(pass)
}

fn run_appendix(cfg: &RunConfig, out: &mut Vec<Artifact>) -> Result<bool> {
    let app = &cfg.appendix;
    let certificates = app
        .profiles
        .iter()
        .map(|g| {
            let graph = crate::convexity::BoundaryGraph::new(g.profile.clone(), g.radius)?;
            Ok(json!({"profile": graph, "certificate": certify(&graph, app.delta_prime)?}))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pass = certificates.iter().all(|c| c["certificate"]["pass"] == true);
    let sets = figure_curves(app.curve, &app.figure)?;
    let mut facts = serde_json::Map::new();
    if app.curve == Curve::Gamma2 {
        let e_positive = sets[1].value.iter().all(|v| *v > 0.0);
        pass &= e_positive;
        facts.insert("second_derivative_limit".into(), json!(second_difference_at_origin(4, 1e-2)));
        facts.insert("e_strictly_positive".into(), json!(e_positive));
        facts.insert("f_slope_sign_changes".into(), json!(sets[2].slope_sign_changes()));
        facts.insert("h_sign_changes".into(), json!(sets[3].sign_changes()));
    }
    let prefix = match app.curve {
        Curve::Gamma1 => "gamma1",
        Curve::Gamma2 => "gamma2",
    };
    let datasets: Vec<_> = sets
        .iter()
        .map(|d| json!({"name": d.name, "description": d.description, "samples": d.x.len()}))
        .collect();
    out.push(Artifact::json(
        "appendix.json",
        &json!({
            "certificates": certificates,
            "curve": app.curve,
            "datasets": datasets,
            "facts": facts,
            "pass": pass,
        }),
    )?);
    for d in &sets {
        let name = if d.name.starts_with(prefix) {
            format!("{}.csv", d.name)
        } else {
            format!("{prefix}_{}.csv", d.name)
        };
        out.push(Artifact::new(name, d.to_csv()));
    }
    Ok(pass)
}

fn run_nonlin(cfg: &RunConfig, domain: &Domain, out: &mut Vec<Artifact>) -> Result<bool> {
    let f = nonlinearity(cfg)?;
    let lambda1 = match cfg.nonlin.lambda1 {
        Some(l) => l,
        None => principal_eigenpair(domain, domain.grid_h, cfg.solver.eigen_tol)?.lambda,
    };
    let report = check_hypotheses(&f, lambda1, cfg.nonlin.s_max, cfg.nonlin.samples)?;
    let mut pass = report.h1.pass && report.h2.pass && report.h3.pass;
    let table = match &cfg.boundedness {
        Some(b) => {
            let family = b.family.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
            let t = boundedness_experiment(b.dim, b.domain, &family, b.delta, cfg.solver.tol)?;
            pass &= !t.flagged;
            Some(t)
        }
        None => None,
    };
    out.push(Artifact::json(
        "nonlin.json",
        &json!({"hypotheses": report, "boundedness": table, "pass": pass}),
    )?);
    Ok(pass)
}
