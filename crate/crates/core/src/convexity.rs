//! Inverted boundary graphs near a point of exterior tangency, the cap graph
//! `G`, its Hessian at the origin and the nonempty-cap certificate, together
//! with the oscillating-boundary curve data.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary profile `psi` with `psi(0') = 1` and `∇psi(0') = 0'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `psi = 1` in `dim` variables.
    Constant { dim: usize },
    /// `psi = 1 + y'^T M y' / 2` with `M` given row by row.
    Quadratic { matrix: Vec<Vec<f64>> },
    /// `psi = 1 + y_1^4`.
    Quartic { dim: usize },
    /// `psi = 1 + x^3 / 2`, an inflection point.
    Gamma1,
    /// `psi = 1 + x^5 sin(1/x)`, a degenerate critical point.
    Gamma2,
}

impl Profile {
    pub fn dim(&self) -> usize {
        match self {
            Profile::Constant { dim } | Profile::Quartic { dim } => *dim,
            Profile::Quadratic { matrix } => matrix.len(),
            Profile::Gamma1 | Profile::Gamma2 => 1,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Constant { .. } => 1.0,
            Profile::Quadratic { matrix } => {
                let mut q = 0.0;
                for (i, row) in matrix.iter().enumerate() {
                    for (j, m) in row.iter().enumerate() {
                        q += x[i] * m * x[j];
                    }
                }
                1.0 + 0.5 * q
            }
            Profile::Quartic { .. } => 1.0 + x[0].powi(4),
            Profile::Gamma1 => 1.0 + 0.5 * x[0].powi(3),
            Profile::Gamma2 => gamma2(x[0]).0,
        }
    }
}

/// A profile together with the radius of its evaluation ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryGraph {
    pub profile: Profile,
    pub radius: f64,
}

impl BoundaryGraph {
    pub fn new(profile: Profile, radius: f64) -> Result<Self> {
        let d = profile.dim();
        if d == 0 || d > 2 {
            return Err(Error::InvalidArgument("profiles in 1 or 2 variables are supported".into()));
        }
        if let Profile::Quadratic { matrix } = &profile {
            let square = matrix.iter().all(|r| r.len() == d);
            let symmetric = (0..d).all(|i| (0..d).all(|j| matrix[i][j] == matrix[j][i]));
            if !square || !symmetric || matrix.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("quadratic profile needs a finite symmetric matrix".into()));
            }
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument("evaluation radius must be positive".into()));
        }
        let g = BoundaryGraph { profile, radius };
        let origin = vec![0.0; d];
        if (g.psi(&origin)? - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("profile must satisfy psi(0') = 1".into()));
        }
        let e = 1e-6 * radius;
        for i in 0..d {
            let mut p = origin.clone();
            let mut m = origin.clone();
            p[i] = e;
            m[i] = -e;
            let slope = (g.psi(&p)? - g.psi(&m)?) / (2.0 * e);
            if slope.abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "profile gradient at 0' is {slope:e} in coordinate {i}"
                )));
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.profile.dim()
    }

    pub fn psi(&self, x: &[f64]) -> Result<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > self.radius {
            return Err(Error::Domain(format!(
                "|x'| = {r} outside the profile ball of radius {}",
                self.radius
            )));
        }
        Ok(self.profile.eval(x))
    }

    /// `F(y', y_N) = y_N (|y'|^2 + psi(z)^2) - psi(z)`, `z = y' / (|y'|^2 + y_N^2)`.
    pub fn implicit_f(&self, y: &[f64], yn: f64) -> Result<f64> {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let d = r2 + yn * yn;
        if !(d > 0.0) {
            return Err(Error::Domain("F is undefined at the origin".into()));
        }
        let z: Vec<f64> = y.iter().map(|v| v / d).collect();
        let p = self.psi(&z)?;
        Ok(yn * (r2 + p * p) - p)
    }

    /// Root `phi(y')` of `F(y', .)` by Newton's method from 1.
    pub fn solve_phi(&self, y: &[f64], tol: f64) -> Result<f64> {
        let radius = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut yn = 1.0;
        let mut f = self.implicit_f(y, yn)?;
        let mut trace = vec![f.abs()];
        for _ in 0..60 {
            if f.abs() <= tol {
                return Ok(yn);
            }
            let e = 1e-7 * yn.abs().max(1e-3);
            let df = (self.implicit_f(y, yn + e)? - self.implicit_f(y, yn - e)?) / (2.0 * e);
            if df.abs() < 1e-3 {
                return Err(Error::ImplicitNeighborhood { radius, derivative: df });
            }
            let step = f / df;
            yn -= step;
            let next = self.implicit_f(y, yn)?;
            trace.push(next.abs());
            // stagnation at roundoff level
            if step.abs() <= 4.0 * f64::EPSILON * yn.abs() && next.abs() <= tol.max(8.0 * f64::EPSILON) {
                return Ok(yn);
            }
            f = next;
        }
        if f.abs() <= tol {
            return Ok(yn);
        }
        Err(Error::NoConvergence {
            method: "implicit Newton",
            iterations: 60,
            last_residual: f.abs(),
            trace,
        })
    }

    /// `G(y') = g / (|y'|^2 + g^2)` with `g(y') = psi(y' / (|y'|^2 + phi(y')^2))`.
    pub fn cap_graph(&self, y: &[f64]) -> Result<f64> {
        let phi = self.solve_phi(y, PHI_TOL)?;
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let d = r2 + phi * phi;
        let z: Vec<f64> = y.iter().map(|v| v / d).collect();
        let g = self.psi(&z)?;
        Ok(g / (r2 + g * g))
    }

    /// Hessian of `psi` at `0'` by Richardson-extrapolated central differences.
    pub fn psi_hessian(&self, step: f64) -> Result<Vec<Vec<f64>>> {
        hessian(|x| self.psi(x), &vec![0.0; self.dim()], step)
    }

    /// Hessian of `G` at `y`.
    pub fn cap_graph_hessian(&self, y: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
        hessian(|x| self.cap_graph(x), y, step)
    }
}

/// Residual target for `phi`.
pub const PHI_TOL: f64 = 1e-14;

fn hessian(f: impl Fn(&[f64]) -> Result<f64>, at: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    let d = at.len();
    let raw = |e: f64| -> Result<Vec<Vec<f64>>> {
        let shifted = |i: usize, si: f64, j: usize, sj: f64| {
            let mut p = at.to_vec();
            p[i] += si * e;
            p[j] += sj * e;
            f(&p)
        };
        let center = f(at)?;
        let mut h = vec![vec![0.0; d]; d];
        for i in 0..d {
            h[i][i] = (shifted(i, 1.0, i, 0.0)? - 2.0 * center + shifted(i, -1.0, i, 0.0)?) / (e * e);
            for j in 0..i {
                let v = (shifted(i, 1.0, j, 1.0)? - shifted(i, 1.0, j, -1.0)? - shifted(i, -1.0, j, 1.0)?
                    + shifted(i, -1.0, j, -1.0)?)
                    / (4.0 * e * e);
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        Ok(h)
    };
    let coarse = raw(step)?;
    let fine = raw(0.5 * step)?;
    Ok((0..d)
        .map(|i| (0..d).map(|j| (4.0 * fine[i][j] - coarse[i][j]) / 3.0).collect())
        .collect())
}

fn eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let d = m.len();
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let mut ev: Vec<f64> = DMatrix::from_row_slice(d, d, &flat)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Outcome of the nonempty-cap construction at one boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct CapCertificate {
    pub delta_prime: f64,
    #[serde(rename = "A")]
    pub psi_hessian: Vec<Vec<f64>>,
    #[serde(rename = "hessG")]
    pub cap_hessian: Vec<Vec<f64>>,
    /// `max |HessG(0') + 2I + A|` over entries.
    pub identity_error: f64,
    /// Smallest eigenvalue of `A + I`; nonnegative under exterior tangency.
    pub tangency_eigenvalue: f64,
    /// Largest eigenvalue of `HessG(0')`; negative for a strict maximum.
    pub concavity_eigenvalue: f64,
    pub gamma: f64,
    pub height: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Points of `∂B_r(0')`: two in one variable, `n` on the circle in two.
fn sphere_samples(dim: usize, r: f64, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![-r], vec![r]],
        _ => (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect(),
    }
}

/// `gamma = max G` over `∂B_{delta'}` and the cap height `(1 - gamma) / 2`.
pub fn cap_height(graph: &BoundaryGraph, delta_prime: f64, n_samples: usize) -> Result<(f64, f64)> {
    if !(delta_prime > 0.0) {
        return Err(Error::InvalidArgument("delta' must be positive".into()));
    }
    let gamma = sphere_samples(graph.dim(), delta_prime, n_samples.max(4))
        .par_iter()
        .map(|y| graph.cap_graph(y))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((gamma, (1.0 - gamma) / 2.0))
}

/// Largest `delta'` in the halving sequence from `start` such that `HessG`
/// has no positive eigenvalue on sampled rings of `B_{delta'}`.
pub fn convexity_radius(graph: &BoundaryGraph, start: f64) -> Result<f64> {
    let mut r = start;
    for _ in 0..30 {
        let pts: Vec<Vec<f64>> = (1..=4)
            .flat_map(|k| sphere_samples(graph.dim(), r * k as f64 / 4.0, 16))
            .collect();
        let worst = pts
            .par_iter()
            .map(|y| {
                let h = graph.cap_graph_hessian(y, 1e-3 * r)?;
                Ok(*eigenvalues(&h).last().unwrap())
            })
            .collect::<Result<Vec<f64>>>();
        match worst {
            Ok(w) if w.iter().all(|&e| e <= 0.0) => return Ok(r),
            Ok(_) | Err(Error::ImplicitNeighborhood { .. }) | Err(Error::Domain(_)) => r *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ImplicitNeighborhood {
        radius: r,
        derivative: f64::NAN,
    })
}

/// Hessian identity, tangency and concavity checks, and the cap height, on
/// `B_{delta'}`. `delta_prime = None` searches with [`convexity_radius`]
/// from half the evaluation radius.
pub fn certify(graph: &BoundaryGraph, delta_prime: Option<f64>) -> Result<CapCertificate> {
    let dp = match delta_prime {
        Some(v) => v,
        None => convexity_radius(graph, (0.5 * graph.radius).min(0.25))?,
    };
    let step = 1e-3 * dp;
    let a = graph.psi_hessian(step)?;
    let hg = graph.cap_graph_hessian(&vec![0.0; graph.dim()], step)?;
    let d = graph.dim();
    let mut identity_error: f64 = 0.0;
    let mut shifted = a.clone();
    for i in 0..d {
        shifted[i][i] += 1.0;
        for j in 0..d {
            let target = -(a[i][j] + if i == j { 2.0 } else { 0.0 });
            identity_error = identity_error.max((hg[i][j] - target).abs());
        }
    }
    let tangency_eigenvalue = eigenvalues(&shifted)[0];
    let concavity_eigenvalue = *eigenvalues(&hg).last().unwrap();
    let (gamma, height) = cap_height(graph, dp, 64)?;
    let mut notes = Vec::new();
    if tangency_eigenvalue < -1e-6 {
        notes.push("A + I is not positive semidefinite: the ball is not exterior tangent".into());
    }
    if concavity_eigenvalue >= 0.0 {
        notes.push("inverted neighborhood not convex".into());
    }
    if !(gamma < 1.0) {
        notes.push("gamma >= 1: no strict maximum of G at 0'".into());
    }
    let pass = notes.is_empty() && height > 0.0;
    Ok(CapCertificate {
        delta_prime: dp,
        psi_hessian: a,
        cap_hessian: hg,
        identity_error,
        tangency_eigenvalue,
        concavity_eigenvalue,
        gamma,
        height,
        pass,
        notes,
    })
}

/// `(psi, psi', psi'')` for `psi(x) = 1 + x^5 sin(1/x)`, with the limits at 0.
pub fn gamma2(x: f64) -> (f64, f64, f64) {
    if x == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    let (s, c) = (1.0 / x).sin_cos();
    (
        1.0 + x.powi(5) * s,
        5.0 * x.powi(4) * s - x.powi(3) * c,
        20.0 * x.powi(3) * s - 8.0 * x * x * c - x * s,
    )
}

/// `(g, g', g'')` for the unit circle arc `g(x) = sqrt(1 - x^2)`.
pub fn circle_arc(x: f64) -> (f64, f64, f64) {
    let q = 1.0 - x * x;
    let g = q.sqrt();
    (g, -x / g, -1.0 / (q * g))
}

/// Plane inversion `p / |p|^2`.
fn invert(p: (f64, f64)) -> (f64, f64) {
    let d = p.0 * p.0 + p.1 * p.1;
    (p.0 / d, p.1 / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Gamma1,
    Gamma2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureOptions {
    pub samples: usize,
    /// Samples with `0 < |x| < puncture` are skipped.
    pub puncture: f64,
    pub interval: (f64, f64),
    /// Interval of the second-derivative dataset.
    pub zoom: (f64, f64),
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            samples: 20001,
            puncture: 1e-5,
            interval: (-0.01, 0.01),
            zoom: (-5e-4, 5e-4),
        }
    }
}

/// One `x,value` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub name: String,
    pub description: String,
    pub x: Vec<f64>,
    pub value: Vec<f64>,
}

impl Dataset {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.x.iter().zip(&self.value) {
            out.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        out
    }

    /// Sign changes between consecutive nonzero values.
    pub fn sign_changes(&self) -> usize {
        sign_changes(&self.value)
    }

    /// Sign changes of the forward differences.
    pub fn slope_sign_changes(&self) -> usize {
        let d: Vec<f64> = self.value.windows(2).map(|w| w[1] - w[0]).collect();
        sign_changes(&d)
    }
}

pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn abscissae(interval: (f64, f64), n: usize, puncture: f64) -> Result<Vec<f64>> {
    let (a, b) = interval;
    if !(a < b) || n < 2 {
        return Err(Error::InvalidArgument("need an increasing interval and at least 2 samples".into()));
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .filter(|x| *x == 0.0 || x.abs() >= puncture)
        .collect())
}

/// Curve datasets: for `Gamma2` the derivative differences (d), (e) and the
/// second-coordinate differences (f) and (h) after inversion; for `Gamma1`
/// the curve and its inversion.
///
/// After inversion points are matched at equal first coordinate by solving
/// for the partner point exactly: the line `y = 1` inverts to the circle
/// through the origin of radius `1/2`, and the unit circle is fixed.
pub fn figure_curves(curve: Curve, opts: &FigureOptions) -> Result<Vec<Dataset>> {
    let xs = abscissae(opts.interval, opts.samples, opts.puncture)?;
    match curve {
        Curve::Gamma1 => {
            let xs = abscissae((-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4), opts.samples, 0.0)?;
            let f = |x: f64| 0.5 * x.powi(3) + 1.0;
            let curve = Dataset {
                name: "gamma1".into(),
                description: "boundary graph x^3/2 + 1".into(),
                value: xs.iter().map(|&x| f(x)).collect(),
                x: xs.clone(),
            };
            let (px, py): (Vec<f64>, Vec<f64>) = xs.iter().map(|&x| invert((x, f(x)))).unzip();
            let image = Dataset {
                name: "gamma1_inverted".into(),
                description: "inversion of the boundary graph".into(),
                x: px,
                value: py,
            };
            Ok(vec![curve, image])
        }
        Curve::Gamma2 => {
            let d = Dataset {
                name: "d".into(),
                description: "psi' - g'".into(),
                value: xs.iter().map(|&x| gamma2(x).1 - circle_arc(x).1).collect(),
                x: xs.clone(),
            };
            let zx = abscissae(opts.zoom, opts.samples, opts.puncture)?;
            let e = Dataset {
                name: "e".into(),
                description: "psi'' - g''".into(),
                value: zx.iter().map(|&x| gamma2(x).2 - circle_arc(x).2).collect(),
                x: zx,
            };
            let image: Vec<(f64, f64)> = xs.iter().map(|&x| invert((x, gamma2(x).0))).collect();
            let line_partner = |p1: f64| {
                // t / (t^2 + 1) = p1 on the branch through t = 0
                let t = if p1 == 0.0 {
                    0.0
                } else {
                    2.0 * p1 / (1.0 + (1.0 - 4.0 * p1 * p1).sqrt())
                };
                1.0 / (t * t + 1.0)
            };
            let f = Dataset {
                name: "f".into(),
                description: "second coordinate of h(Gamma2) - h(x, 1)".into(),
                x: image.iter().map(|p| p.0).collect(),
                value: image.iter().map(|p| p.1 - line_partner(p.0)).collect(),
            };
            let h = Dataset {
                name: "h".into(),
                description: "second coordinate of h(Gamma2) - h(Gamma3)".into(),
                x: image.iter().map(|p| p.0).collect(),
                value: image.iter().map(|p| p.1 - (1.0 - p.0 * p.0).sqrt()).collect(),
            };
            Ok(vec![d, e, f, h])
        }
    }
}

/// Richardson-extrapolated second central difference of `psi - g` at 0.
pub fn second_difference_at_origin(steps: usize, first_step: f64) -> f64 {
    let diff = |x: f64| (gamma2(x).0 - 1.0) - (circle_arc(x).0 - 1.0);
    let d2 = |e: f64| (diff(e) - 2.0 * diff(0.0) + diff(-e)) / (e * e);
    let mut table: Vec<f64> = (0..steps).map(|k| d2(first_step / 2f64.powi(k as i32))).collect();
    for level in 1..steps {
        let w = 4f64.powi(level as i32);
        table = table.windows(2).map(|p| (w * p[1] - p[0]) / (w - 1.0)).collect();
    }
    table[0]
}
