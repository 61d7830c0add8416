use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use super::{add, dot, scale, Domain, Point};
use crate::error::{Error, Result};
use crate::grid::RegionMask;

/// Moving-plane data for one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapSpec {
    pub direction: Point,
    pub lambda0: f64,
    pub lambda_star: f64,
    /// Set when the maximal cap is thinner than two grid spacings.
    pub degenerate: bool,
}

impl CapSpec {
    /// Whether `x` lies on the cap side of the plane at `lambda`.
    #[inline]
    pub fn below(&self, x: Point, lambda: f64) -> bool {
        dot(&x, &self.direction) < lambda
    }

    /// Interior nodes of the maximal cap. Nodes within roundoff of the plane
    /// are left out so that the mask does not depend on the sign of noise.
    pub fn maximal_cap_mask(&self, domain_mask: &RegionMask) -> RegionMask {
        let eps = 1e-9 * self.lambda_star.abs().max(1.0);
        let grid = domain_mask.grid;
        RegionMask {
            grid,
            inside: domain_mask
                .inside
                .iter()
                .enumerate()
                .map(|(k, &b)| b && dot(&grid.point(k), &self.direction) < self.lambda_star - eps)
                .collect(),
        }
    }
}

/// Uniformly spaced unit directions, `angle_k = 2 pi k / n`.
pub fn direction_set(n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let (s, c) = (TAU * k as f64 / n as f64).sin_cos();
            [c, s]
        })
        .collect()
}

/// Computes `lambda0(nu)` and `lambda*(nu)`.
///
/// A point `x` with `t = x . nu` stays in the cap for every `mu > t`, and its
/// reflection travels along the ray `x + s nu` reaching `s = 2 (mu - t)`. The
/// reflected caps therefore stay inside the domain up to
/// `min_x (t + s_exit(x) / 2)`, where `s_exit` is the first exit distance
/// along the ray; the minimum is attained at boundary points where the ray
/// enters the domain. Exit distances are found by sphere tracing the signed
/// distance and refined by bisection to `tol`.
pub fn compute_lambda_star(domain: &Domain, nu: Point, tol: f64) -> Result<CapSpec> {
    if ((nu[0] * nu[0] + nu[1] * nu[1]).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("cap direction must be a unit vector".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let h = domain.grid_h;
    let grid = domain.grid(h)?;
    let has_interior = (0..grid.len()).any(|k| domain.signed_distance(grid.point(k)) < 0.0);
    if !has_interior {
        return Err(Error::EmptyRegion("domain has no interior grid nodes".into()));
    }
    let samples = domain.boundary_samples();
    let lambda0 = domain.shape.min_projection(nu).unwrap_or_else(|| {
        samples
            .iter()
            .map(|b| dot(&b.point, &nu))
            .fold(f64::INFINITY, f64::min)
    });
    let (lo, hi) = domain.bounding_box();
    let max_len = 2.0 * ((hi[0] - lo[0]).hypot(hi[1] - lo[1])) + h;

    let first_step = h / 8.0;
    let bound = |point: Point, normal: Point| -> f64 {
        if dot(&normal, &nu) > 1e-12 {
            return f64::INFINITY;
        }
        if let Some(s) = exit_distance(domain, point, nu, first_step, max_len, tol) {
            return dot(&point, &nu) + 0.5 * s;
        }
        // The ray runs along the boundary (flat sides, corners, tangency).
        // Interior points next to the sample see the same exit, so trace
        // from a point pushed slightly inward.
        let start = add(point, scale(normal, -first_step / 2.0));
        match exit_distance(domain, start, nu, first_step, max_len, tol) {
            Some(s) => dot(&start, &nu) + 0.5 * s,
            None => f64::INFINITY,
        }
    };
    let values: Vec<f64> = samples.par_iter().map(|b| bound(b.point, b.normal)).collect();
    let (best, sampled) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lambda_star = if sampled.is_finite() {
        sampled.min(refine_between_samples(domain, samples, best, &bound))
    } else {
        sampled
    };

    if !lambda_star.is_finite() {
        return Ok(CapSpec {
            direction: nu,
            lambda0,
            lambda_star: lambda0,
            degenerate: true,
        });
    }
    let lambda_star = lambda_star.max(lambda0);
    Ok(CapSpec {
        direction: nu,
        lambda0,
        lambda_star,
        degenerate: lambda_star <= lambda0 + 2.0 * h,
    })
}

/// Golden-section search for a smaller bound between the neighbors of the
/// best sample, with trial points projected back onto the boundary.
fn refine_between_samples(
    domain: &Domain,
    samples: &[super::BoundarySample],
    best: usize,
    bound: &(impl Fn(Point, Point) -> f64 + Sync),
) -> f64 {
    let n = samples.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let a = samples[(best + n - 1) % n].point;
    let b = samples[(best + 1) % n].point;
    let mid = samples[best].point;
    let on_boundary = |t: f64| -> Option<(Point, Point)> {
        // quadratic through a (t=-1), mid (t=0), b (t=1)
        let w = [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)];
        let mut p = [0.0; 2];
        for d in 0..2 {
            p[d] = w[0] * a[d] + w[1] * mid[d] + w[2] * b[d];
        }
        let mut g = [0.0; 2];
        for _ in 0..3 {
            let e = 1e-7 * domain.grid_h;
            g = [
                domain.signed_distance([p[0] + e, p[1]]) - domain.signed_distance([p[0] - e, p[1]]),
                domain.signed_distance([p[0], p[1] + e]) - domain.signed_distance([p[0], p[1] - e]),
            ];
            let gn = super::norm(&g);
            if !(gn > 0.0) {
                return None;
            }
            g = scale(g, 1.0 / gn);
            p = add(p, scale(g, -domain.signed_distance(p)));
        }
        (domain.signed_distance(p).abs() < 1e-12 * (1.0 + super::norm(&p))).then_some((p, g))
    };
    let f = |t: f64| on_boundary(t).map_or(f64::INFINITY, |(p, g)| bound(p, g));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// Distance along `dir` from `start` to the first exit from the domain;
/// `None` when the ray is not inside after the first step.
fn exit_distance(domain: &Domain, start: Point, dir: Point, first_step: f64, max_len: f64, tol: f64) -> Option<f64> {
    let at = |s: f64| domain.signed_distance(add(start, scale(dir, s)));
    let mut s = first_step;
    if at(s) >= 0.0 {
        return None;
    }
    let min_step = first_step.min(tol.max(1e-3 * first_step));
    loop {
        let d = at(s);
        let step = (0.9 * -d).max(min_step);
        let next = s + step;
        if next > max_len {
            return Some(max_len);
        }
        if at(next) >= 0.0 {
            // bracket [s, next]: inside at s, outside at next
            let (mut a, mut b) = (s, next);
            while b - a > tol {
                let m = 0.5 * (a + b);
                if at(m) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(a);
        }
        s = next;
    }
}

/// Union of maximal caps over a direction set.
#[derive(Debug, Clone)]
pub struct OptimalCapSet {
    pub caps: Vec<CapSpec>,
    /// Interior nodes of the union of maximal caps.
    pub mask: RegionMask,
    /// Interior nodes not covered by any sampled maximal cap.
    pub complement: RegionMask,
}

pub fn optimal_cap_set(domain: &Domain, n_directions: usize, tol: f64) -> Result<OptimalCapSet> {
    if n_directions < 4 {
        return Err(Error::InvalidArgument("at least 4 directions are required".into()));
    }
    optimal_cap_set_for(domain, &direction_set(n_directions), tol)
}

/// Same as [`optimal_cap_set`] for an explicit direction list. Masks are
/// merged in direction-index order.
pub fn optimal_cap_set_for(domain: &Domain, directions: &[Point], tol: f64) -> Result<OptimalCapSet> {
    let grid = domain.grid(domain.grid_h)?;
    let interior = domain.interior_mask(&grid);
    let caps: Vec<CapSpec> = directions
        .par_iter()
        .map(|&nu| compute_lambda_star(domain, nu, tol))
        .collect::<Result<_>>()?;
    let mut mask = RegionMask::empty(grid);
    for cap in &caps {
        mask.union_with(&cap.maximal_cap_mask(&interior))?;
    }
    let complement = interior.difference(&mask)?;
    Ok(OptimalCapSet {
        caps,
        mask,
        complement,
    })
}

#[derive(Debug, Clone)]
pub struct InteriorRegion {
    pub mask: RegionMask,
    /// Set when `delta` exceeds the sampled inradius.
    pub empty_warning: bool,
}

/// Nodes at distance greater than `delta` from the boundary.
pub fn interior_region(domain: &Domain, delta: f64) -> Result<InteriorRegion> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument("delta must be nonnegative".into()));
    }
    let grid = domain.grid(domain.grid_h)?;
    let mask = RegionMask {
        grid,
        inside: (0..grid.len())
            .map(|k| domain.signed_distance(grid.point(k)) < -delta)
            .collect(),
    };
    let empty_warning = mask.is_empty();
    Ok(InteriorRegion {
        mask,
        empty_warning,
    })
}
