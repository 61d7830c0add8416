use serde::Serialize;

use super::laplacian::{max_abs, Laplacian};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::grid::GridFunction;
use crate::nonlinearity::Nonlinearity;

pub const NEWTON_MAX_ITERATIONS: usize = 100;
/// Smallest Armijo step.
pub const DAMPING_FLOOR: f64 = 1.0 / 1024.0;
const ARMIJO_C: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
    /// Residual max-norm per iteration, starting with the initial guess.
    pub trace: Vec<f64>,
}

/// Damped Newton for `-Δ_h u = f(u)` with `u = 0` on the boundary.
///
/// `init` must live on the grid `domain.grid_function(h)` and be positive on
/// the interior. The converged iterate must be positive on every interior node
/// and not collapse onto the zero solution. `tol` bounds the residual
/// max-norm; it is raised to the rounding level of the residual itself when
/// that is larger.
pub fn solve_semilinear(
    domain: &Domain,
    f: &Nonlinearity,
    h: f64,
    init: &GridFunction,
    tol: f64,
) -> Result<(GridFunction, NewtonStats)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut u = domain.grid_function(h)?;
    if init.grid != u.grid || init.interior != u.interior {
        return Err(Error::InvalidArgument("initial guess lives on a different grid".into()));
    }
    let lap = Laplacian::assemble(&u)?;
    let mut x = lap.gather(init);
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("initial guess must be positive on the interior".into()));
    }
    let init_scale = max_abs(&x);

    let residual = |x: &[f64]| -> Vec<f64> {
        let mut r = lap.apply(x);
        for (ri, &xi) in r.iter_mut().zip(x) {
            *ri -= f.eval(xi);
        }
        r
    };
    let norm2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rounding = |x: &[f64]| {
        8.0 * f64::EPSILON
            * x.iter()
                .zip(&lap.diag)
                .map(|(&v, &d)| 2.0 * d * v.abs() + f.eval(v).abs())
                .fold(0.0, f64::max)
    };

    let mut r = residual(&x);
    let mut trace = vec![max_abs(&r)];
    let mut iterations = 0;
    while max_abs(&r) >= tol.max(rounding(&x)) {
        if iterations == NEWTON_MAX_ITERATIONS {
            return Err(stagnation(iterations, trace));
        }
        iterations += 1;
        let shift: Vec<f64> = x.iter().map(|&v| -f.deriv(v)).collect();
        let dx = lap.solve(Some(&shift), &r)?;
        let r0 = norm2(&r);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - t * d).collect();
            let rt = residual(&trial);
            if rt.iter().all(|v| v.is_finite()) && norm2(&rt) <= (1.0 - ARMIJO_C * t) * r0 {
                x = trial;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < DAMPING_FLOOR {
                return Err(stagnation(iterations, trace));
            }
        }
        trace.push(max_abs(&r));
    }

    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    // a tiny "positive" iterate is the zero solution plus roundoff
    if !(min > 0.0) || max_abs(&x) < 1e-8 * init_scale {
        return Err(Error::LostPositivity { min_value: min });
    }
    lap.scatter(&x, &mut u);
    Ok((
        u,
        NewtonStats {
            iterations,
            residual: max_abs(&r),
            trace,
        },
    ))
}

fn stagnation(iterations: usize, trace: Vec<f64>) -> Error {
    Error::NoConvergence {
        method: "damped Newton",
        iterations,
        last_residual: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    }
}

/// Tries `c * phi` for each amplitude in order and returns the first
/// converged positive solution together with the amplitude used.
pub fn solve_with_amplitudes(
    domain: &Domain,
    f: &Nonlinearity,
    phi: &GridFunction,
    amplitudes: &[f64],
    tol: f64,
) -> Result<(GridFunction, NewtonStats, f64)> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidArgument("amplitude ladder is empty".into()));
    }
    let mut last = None;
    for &c in amplitudes {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplitude must be positive, got {c}")));
        }
        let mut init = phi.clone();
        init.values.iter_mut().for_each(|v| *v *= c);
        match solve_semilinear(domain, f, phi.grid.h, &init, tol) {
            Ok((u, stats)) => return Ok((u, stats, c)),
            Err(e @ (Error::NoConvergence { .. } | Error::LostPositivity { .. } | Error::LinearSolve(_))) => {
                last = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

/// Geometric ladder `base * 2^k`, ordered by distance from `base`:
/// `base, base/2, 2 base, base/4, 4 base, ...`.
pub fn amplitude_ladder(base: f64, rungs: usize) -> Vec<f64> {
    let mut out = vec![base];
    let mut k = 1;
    while out.len() < rungs {
        out.push(base / f64::powi(2.0, k));
        if out.len() < rungs {
            out.push(base * f64::powi(2.0, k));
        }
        k += 1;
    }
    out
}
