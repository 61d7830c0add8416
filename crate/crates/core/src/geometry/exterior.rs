use rayon::prelude::*;
use serde::Serialize;

use super::{add, norm, scale, sub, Domain, Point};
use crate::error::{Error, Result};
use crate::grid::RegionMask;

#[derive(Debug, Clone, Serialize)]
pub struct ExteriorSphereReport {
    pub rho: f64,
    pub pass: bool,
    /// Largest `rho - |p - c|` over interior nodes `p` and sampled ball centers `c`.
    pub worst_penetration: f64,
    pub worst_boundary_point: Point,
    pub tolerance: f64,
    pub samples_checked: usize,
}

/// Checks that every sampled exterior ball `B_rho(x0 + rho n(x0))` contains no
/// interior grid node.
pub fn validate_exterior_sphere(domain: &Domain, rho: f64) -> Result<ExteriorSphereReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument("rho must be positive".into()));
    }
    let h = domain.grid_h;
    let grid = domain.grid(h)?;
    let mask = domain.interior_mask(&grid);
    // one ball per grid spacing of boundary length is enough
    let stride = 4;
    let samples: Vec<_> = domain.boundary_samples().iter().step_by(stride).collect();
    let tolerance = 1e-9 * (1.0 + rho);

    let (depth, at) = samples
        .par_iter()
        .map(|b| {
            let c = add(b.point, scale(b.normal, rho));
            (ball_penetration(&mask, c, rho), b.point)
        })
        .reduce(
            || (f64::NEG_INFINITY, [0.0, 0.0]),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && lex_lt(b.1, a.1)) { b } else { a },
        );
    Ok(ExteriorSphereReport {
        rho,
        pass: depth <= tolerance,
        worst_penetration: depth,
        worst_boundary_point: at,
        tolerance,
        samples_checked: samples.len(),
    })
}

/// Largest `rho - |p - c|` over nodes `p` of `mask`; negative infinity when
/// the ball misses the grid.
pub fn ball_penetration(mask: &RegionMask, c: Point, rho: f64) -> f64 {
    let grid = &mask.grid;
    let h = grid.h;
    let lo = |x: f64, o: f64| ((x - rho - o) / h).floor().max(0.0) as usize;
    let hi = |x: f64, o: f64| ((x + rho - o) / h).ceil().max(-1.0);
    let (i0, j0) = (lo(c[0], grid.origin[0]), lo(c[1], grid.origin[1]));
    let (i1, j1) = (hi(c[0], grid.origin[0]), hi(c[1], grid.origin[1]));
    if i1 < 0.0 || j1 < 0.0 {
        return f64::NEG_INFINITY;
    }
    let i1 = (i1 as usize).min(grid.nx - 1);
    let j1 = (j1 as usize).min(grid.ny - 1);
    let mut worst = f64::NEG_INFINITY;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let k = grid.index(i, j);
            if mask.inside[k] {
                worst = worst.max(rho - norm(&sub(grid.point(k), c)));
            }
        }
    }
    worst
}

fn lex_lt(a: Point, b: Point) -> bool {
    a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_admits_large_balls() {
        let d = Domain::disk([0.0, 0.0], 1.0, 10.0, 1.0 / 32.0).unwrap();
        let r = validate_exterior_sphere(&d, 10.0).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.worst_penetration < 0.0);
    }

    #[test]
    fn annulus_half_radius_passes() {
        let d = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, 1.0 / 32.0).unwrap();
        let r = validate_exterior_sphere(&d, 0.5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn annulus_large_radius_fails_at_the_hole() {
        let d = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, 1.0 / 32.0).unwrap();
        let r = validate_exterior_sphere(&d, 1.5).unwrap();
        assert!(!r.pass);
        assert!(r.worst_penetration > 0.5);
        assert!((norm(&r.worst_boundary_point) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_admits_any_radius() {
        let d = Domain::square([0.0, 0.0], 1.0, 5.0, 1.0 / 32.0).unwrap();
        assert!(validate_exterior_sphere(&d, 5.0).unwrap().pass);
    }
}
