use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::ScalarField;
use crate::nonlinearity::Nonlinearity;

/// Radial domains for the ODE `u'' + (N-1)/r u' + f(u) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialDomain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl RadialDomain {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialDomain::Ball { radius } => radius > 0.0 && radius.is_finite(),
            RadialDomain::Annulus { inner, outer } => inner > 0.0 && inner < outer && outer.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid radial domain {self:?}")))
        }
    }

    pub fn outer(&self) -> f64 {
        match *self {
            RadialDomain::Ball { radius } => radius,
            RadialDomain::Annulus { outer, .. } => outer,
        }
    }

    pub fn inner(&self) -> f64 {
        match *self {
            RadialDomain::Ball { .. } => 0.0,
            RadialDomain::Annulus { inner, .. } => inner,
        }
    }
}

/// Shooting bracket for `u(0)` (ball) or `u'(r_in)` (annulus).
pub const SHOOTING_BRACKET: (f64, f64) = (0.1, 1e3);
const BRACKET_SAMPLES: usize = 64;
/// Number of output samples after the final solve.
const OUTPUT_SAMPLES: usize = 2000;
/// Magnitude treated as blow-up.
const BLOWUP: f64 = 1e150;

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub dim: u32,
    pub domain: RadialDomain,
    /// `u(0)` for balls, `u'(r_in)` for annuli.
    pub shooting_parameter: f64,
    /// `|u|` at the outer radius.
    pub boundary_residual: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl RadialSolution {
    /// Cubic Hermite interpolation of `(u, u')` at `r`; `None` outside the domain.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        let (r0, r1) = (self.r[0], *self.r.last().unwrap());
        if !(r >= r0 && r <= r1) {
            return None;
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1) - 1;
        let (a, b) = (self.r[i], self.r[i + 1]);
        let hh = b - a;
        let t = (r - a) / hh;
        let (u0, u1, d0, d1) = (self.u[i], self.u[i + 1], self.du[i] * hh, self.du[i + 1] * hh);
        let t2 = t * t;
        let t3 = t2 * t;
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * d1;
        let du = ((6.0 * t2 - 6.0 * t) * u0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * u1
            + (3.0 * t2 - 2.0 * t) * d1)
            / hh;
        Some((u, du))
    }

    /// Sample with the largest value.
    pub fn max(&self) -> (f64, f64) {
        let mut best = (self.r[0], self.u[0]);
        for (&r, &u) in self.r.iter().zip(&self.u) {
            if u > best.1 {
                best = (r, u);
            }
        }
        best
    }

    /// Radius of the maximum, refined by a sign change of `u'`.
    pub fn argmax(&self) -> f64 {
        let (r, _) = self.max();
        let i = self.r.iter().position(|&x| x == r).unwrap();
        if i == 0 || i + 1 == self.r.len() {
            return r;
        }
        // u' changes sign in [r_{i-1}, r_{i+1}]
        let (mut a, mut b) = (self.r[i - 1], self.r[i + 1]);
        let d = |x: f64| self.eval(x).map_or(0.0, |v| v.1);
        if d(a) * d(b) > 0.0 {
            return r;
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if d(a) * d(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,u,du\n");
        for i in 0..self.r.len() {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", self.r[i], self.u[i], self.du[i]));
        }
        s
    }
}

/// A radial profile placed in the plane around `center`. For `N >= 3` the
/// plane is read as a meridian section through the symmetry center.
#[derive(Debug, Clone, Copy)]
pub struct RadialField<'a> {
    pub profile: &'a RadialSolution,
    pub center: Point,
}

impl ScalarField for RadialField<'_> {
    fn value(&self, x: Point) -> Option<f64> {
        let r = (x[0] - self.center[0]).hypot(x[1] - self.center[1]);
        self.profile.eval(r).map(|v| v.0)
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        let (_, du) = self.profile.eval(r)?;
        if r == 0.0 {
            return Some([0.0, 0.0]);
        }
        Some([du * d[0] / r, du * d[1] / r])
    }
}

/// Solves `u'' + (N-1)/r u' + f(u) = 0`, `u > 0` inside, `u = 0` on the
/// boundary, by shooting. Adaptive Dormand–Prince steps use `tol` as both
/// absolute and relative error tolerance.
pub fn solve_radial(dim: u32, f: &Nonlinearity, domain: RadialDomain, tol: f64) -> Result<RadialSolution> {
    if dim < 2 {
        return Err(Error::InvalidArgument("radial solver needs N >= 2".into()));
    }
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1e-2), got {tol}")));
    }
    domain.validate()?;
    let ode = Ode { dim, f, tol };
    let end = domain.outer();

    let indicator = |p: f64| -> Result<f64> {
        let (r0, y0) = ode.start(domain, p);
        let run = ode.integrate(r0, y0, end, true, None)?;
        Ok(match run.zero {
            Some(rz) => rz - end,
            None => run.y.last().unwrap()[0].max(0.0),
        })
    };

    let (lo, hi) = SHOOTING_BRACKET;
    let ladder: Vec<f64> = (0..BRACKET_SAMPLES)
        .map(|i| lo * (hi / lo).powf(i as f64 / (BRACKET_SAMPLES - 1) as f64))
        .collect();
    let mut prev = (ladder[0], indicator(ladder[0])?);
    let mut bracket = None;
    for &p in &ladder[1..] {
        let v = indicator(p)?;
        if (prev.1 > 0.0) != (v > 0.0) {
            bracket = Some((prev, (p, v)));
            break;
        }
        prev = (p, v);
    }
    let ((mut a, mut fa), (mut b, _)) = bracket.ok_or(Error::NoBracket { lo, hi })?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = indicator(m)?;
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // keep the side where u stays positive up to the boundary
    let p = if fa > 0.0 { a } else { b };

    let (r0, y0) = ode.start(domain, p);
    let max_step = (end - r0) / OUTPUT_SAMPLES as f64;
    let run = ode.integrate(r0, y0, end, false, Some(max_step))?;
    let mut r = run.r;
    let mut y = run.y;
    if let RadialDomain::Ball { .. } = domain {
        r.insert(0, 0.0);
        y.insert(0, [p, 0.0]);
    }
    let boundary_residual = y.last().unwrap()[0].abs();
    Ok(RadialSolution {
        dim,
        domain,
        shooting_parameter: p,
        boundary_residual,
        u: y.iter().map(|v| v[0]).collect(),
        du: y.iter().map(|v| v[1]).collect(),
        r,
    })
}

struct Ode<'a> {
    dim: u32,
    f: &'a Nonlinearity,
    tol: f64,
}

struct Run {
    r: Vec<f64>,
    y: Vec<[f64; 2]>,
    zero: Option<f64>,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Ode<'_> {
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], -(self.dim as f64 - 1.0) / r * y[1] - self.f.eval(y[0])]
    }

    /// Starting radius and state. Balls start off the singular point with the
    /// series `u = a - f(a) r^2 / (2N)`.
    fn start(&self, domain: RadialDomain, p: f64) -> (f64, [f64; 2]) {
        match domain {
            RadialDomain::Ball { radius } => {
                let fa = self.f.eval(p);
                let len = 1.0 / (self.f.deriv(p).abs() + 1.0).sqrt();
                let r0 = 1e-3 * radius.min(len);
                let n = self.dim as f64;
                (r0, [p - fa * r0 * r0 / (2.0 * n), -fa * r0 / n])
            }
            RadialDomain::Annulus { inner, .. } => (inner, [0.0, p]),
        }
    }

    /// One Dormand–Prince step; returns the fifth-order state and the error
    /// estimate.
    fn step(&self, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s] = self.rhs(r + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut err = [0.0; 2];
        for (s, ks) in k.iter().enumerate() {
            // fifth-order weights are the last stage row; the seventh weight is 0
            let b5 = if s < 6 { A[6][s] } else { 0.0 };
            for d in 0..2 {
                y5[d] += h * b5 * ks[d];
                err[d] += h * (b5 - B4[s]) * ks[d];
            }
        }
        (y5, err)
    }

    fn integrate(&self, r0: f64, y0: [f64; 2], end: f64, stop_at_zero: bool, max_step: Option<f64>) -> Result<Run> {
        let tol = self.tol;
        let mut r = r0;
        let mut y = y0;
        let mut out = Run {
            r: vec![r0],
            y: vec![y0],
            zero: None,
        };
        let cap = max_step.unwrap_or(end - r0);
        let mut h = (1e-3 * (end - r0)).min(cap);
        let mut steps = 0usize;
        while r < end {
            steps += 1;
            if steps > 10_000_000 {
                return Err(Error::NoConvergence {
                    method: "radial integration",
                    iterations: steps,
                    last_residual: r,
                    trace: vec![],
                });
            }
            let h_try = h.min(end - r);
            let (yn, e) = self.step(r, y, h_try);
            let sc = |d: usize| tol + tol * y[d].abs().max(yn[d].abs());
            let err = (e[0] / sc(0)).abs().max((e[1] / sc(1)).abs());
            if !err.is_finite() {
                if h_try < 1e-14 * end.max(1.0) {
                    return Err(Error::NonFinite(format!("radial integration blew up at r = {r}")));
                }
                h = 0.25 * h_try;
                continue;
            }
            if err > 1.0 {
                h = h_try * (0.9 * err.powf(-0.2)).max(0.2);
                continue;
            }
            if stop_at_zero && y[0] > 0.0 && yn[0] <= 0.0 {
                out.zero = Some(self.locate_zero(r, y, h_try));
                return Ok(out);
            }
            r = if h_try == end - r { end } else { r + h_try };
            y = yn;
            if y[0].abs() > BLOWUP || !y[0].is_finite() || !y[1].is_finite() {
                return Err(Error::NonFinite(format!("radial solution exceeds {BLOWUP:e} at r = {r}")));
            }
            out.r.push(r);
            out.y.push(y);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * grow).min(cap);
        }
        Ok(out)
    }

    /// Zero of `u` within the step `[r, r + h]`, by bisection on sub-steps.
    fn locate_zero(&self, r: f64, y: [f64; 2], h: f64) -> f64 {
        let (mut a, mut b) = (0.0, h);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if self.step(r, y, m).0[0] > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        r + 0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_ball_is_exact() {
        let f = Nonlinearity::constant(1.0, 3);
        let s = solve_radial(3, &f, RadialDomain::Ball { radius: 1.0 }, 1e-10).unwrap();
        assert!((s.shooting_parameter - 1.0 / 6.0).abs() < 1e-12);
        for (&r, &u) in s.r.iter().zip(&s.u) {
            assert!((u - (1.0 - r * r) / 6.0).abs() < 1e-10);
        }
        let (u, du) = s.eval(0.37).unwrap();
        assert!((u - (1.0 - 0.37f64 * 0.37) / 6.0).abs() < 1e-10);
        assert!((du + 0.37 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn cubic_ball_is_monotone() {
        let f = Nonlinearity::power(3.0, 3).unwrap();
        let s = solve_radial(3, &f, RadialDomain::Ball { radius: 1.0 }, 1e-10).unwrap();
        assert!(s.boundary_residual < 1e-10, "{}", s.boundary_residual);
        assert!(s.u[..s.u.len() - 1].iter().all(|&u| u > 0.0));
        assert!(s.r.iter().zip(&s.du).skip(1).all(|(_, &d)| d < 0.0));
    }

    #[test]
    fn cubic_annulus_has_a_single_interior_max() {
        let f = Nonlinearity::power(3.0, 3).unwrap();
        let s = solve_radial(3, &f, RadialDomain::Annulus { inner: 1.0, outer: 2.0 }, 1e-10).unwrap();
        assert!(s.boundary_residual < 1e-8);
        let rm = s.argmax();
        assert!(rm > 1.0 && rm < 2.0);
        let sign_changes = s.du.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn critical_exponent_has_no_bracket() {
        let f = Nonlinearity::power(5.0, 3).unwrap();
        let r = solve_radial(3, &f, RadialDomain::Ball { radius: 1.0 }, 1e-8);
        assert!(matches!(r, Err(Error::NoBracket { .. })), "{r:?}");
    }

    #[test]
    fn csv_has_three_columns() {
        let f = Nonlinearity::constant(1.0, 3);
        let s = solve_radial(3, &f, RadialDomain::Ball { radius: 1.0 }, 1e-8).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("r,u,du\n"));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 3);
    }
}
