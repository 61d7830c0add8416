use faer::prelude::Solve;
use serde::Serialize;

use super::laplacian::{max_abs, Laplacian};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::grid::GridFunction;

/// Dirichlet principal eigenpair; `phi` is max-normalized and positive on the
/// interior.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub phi: GridFunction,
    pub iterations: usize,
    /// Rayleigh quotient per iteration.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub h: f64,
    pub iterations: usize,
    pub interior_nodes: usize,
    pub min_phi: f64,
}

impl EigenPair {
    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            lambda1: self.lambda,
            h: self.phi.grid.h,
            iterations: self.iterations,
            interior_nodes: self.phi.interior_nodes().count(),
            min_phi: self.phi.min_interior().unwrap_or(f64::NAN),
        }
    }
}

pub const EIGEN_MAX_ITERATIONS: usize = 500;

/// Minimum number of grid nodes across the domain's inradius diameter.
const MIN_NODES_PER_DIAMETER: f64 = 32.0;

/// Inverse power iteration on `-Δ_h`, stopped once the Rayleigh quotient
/// changes by less than `tol` (relative).
pub fn principal_eigenpair(domain: &Domain, h: f64, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let width = 2.0 * domain.with_grid_h(h)?.inradius();
    if width / h < MIN_NODES_PER_DIAMETER {
        return Err(Error::InvalidArgument(format!(
            "grid spacing {h} under-resolves the domain (inradius diameter {width:.3e}); need at least {MIN_NODES_PER_DIAMETER} nodes across"
        )));
    }
    let mut phi = domain.grid_function(h)?;
    let lap = Laplacian::assemble(&phi)?;
    let lu = lap
        .matrix(None)?
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;

    let mut x = vec![1.0; lap.len()];
    let mut trace = Vec::new();
    let mut lambda = f64::NAN;
    for it in 1..=EIGEN_MAX_ITERATIONS {
        let rhs = faer::Col::<f64>::from_fn(x.len(), |i| x[i]);
        let y = lu.solve(&rhs);
        let scale = (0..x.len()).fold(0.0f64, |m, i| m.max(y[i].abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::LinearSolve("inverse iteration produced a zero or non-finite vector".into()));
        }
        x = (0..x.len()).map(|i| y[i] / scale).collect();
        let ax = lap.apply(&x);
        let rq = dot(&x, &ax) / dot(&x, &x);
        trace.push(rq);
        let change = (rq - lambda).abs();
        lambda = rq;
        if change < tol * rq.abs() {
            // max-normalize with the sign fixed positive
            let s = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let m = max_abs(&x);
            let v: Vec<f64> = x.iter().map(|&v| s * v / m).collect();
            lap.scatter(&v, &mut phi);
            return Ok(EigenPair {
                lambda,
                phi,
                iterations: it,
                trace,
            });
        }
    }
    Err(Error::NoConvergence {
        method: "inverse power iteration",
        iterations: EIGEN_MAX_ITERATIONS,
        last_residual: trace
            .windows(2)
            .last()
            .map_or(f64::NAN, |w| (w[1] - w[0]).abs()),
        trace,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
