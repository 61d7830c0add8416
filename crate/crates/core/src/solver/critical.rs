use serde::Serialize;

use super::RadialSolution;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{GridFunction, RegionMask};

/// Relative gradient threshold below which a node counts as critical.
pub const DEFAULT_THETA: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct Cluster {
    pub centroid: Point,
    pub size: usize,
    pub min_gradient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    /// Flagged nodes, as coordinates.
    pub points: Vec<Point>,
    /// 8-connected groups of flagged nodes.
    pub clusters: Vec<Cluster>,
    /// Smallest `|∇_h u|` over the region and where it occurs.
    pub min_gradient: f64,
    pub min_gradient_at: Point,
    /// Largest `|∇_h u|` over the interior of `u`; the gradient scale.
    pub max_gradient: f64,
    pub threshold: f64,
}

/// Nodes of `region` where `|∇_h u| <= theta * max |∇_h u|`.
pub fn critical_points(u: &GridFunction, region: &RegionMask, theta: f64) -> Result<CriticalPointReport> {
    if region.grid != u.grid {
        return Err(Error::InvalidArgument("region and grid function use different grids".into()));
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidArgument("theta must be nonnegative".into()));
    }
    let grad_norm = |k: usize| {
        let g = u.node_gradient(k);
        g[0].hypot(g[1])
    };
    let max_gradient = u.interior_nodes().map(grad_norm).fold(0.0, f64::max);
    let nodes: Vec<usize> = region.nodes().filter(|&k| u.interior[k]).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("no interior nodes in the region".into()));
    }
    let threshold = theta * max_gradient;
    let mut min_gradient = f64::INFINITY;
    let mut min_node = nodes[0];
    let mut flagged = vec![false; u.grid.len()];
    let mut grads = vec![0.0; u.grid.len()];
    for &k in &nodes {
        let g = grad_norm(k);
        grads[k] = g;
        if g < min_gradient {
            min_gradient = g;
            min_node = k;
        }
        flagged[k] = g <= threshold;
    }

    let grid = u.grid;
    let mut seen = vec![false; grid.len()];
    let mut clusters = Vec::new();
    let mut points = Vec::new();
    for &k in &nodes {
        if !flagged[k] {
            continue;
        }
        points.push(grid.point(k));
        if seen[k] {
            continue;
        }
        seen[k] = true;
        let mut stack = vec![k];
        let (mut sum, mut size, mut gmin) = ([0.0, 0.0], 0usize, f64::INFINITY);
        while let Some(c) = stack.pop() {
            let p = grid.point(c);
            sum = [sum[0] + p[0], sum[1] + p[1]];
            size += 1;
            gmin = gmin.min(grads[c]);
            let (i, j) = grid.coords(c);
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
                        continue;
                    }
                    let n = grid.index(ni as usize, nj as usize);
                    if flagged[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        clusters.push(Cluster {
            centroid: [sum[0] / size as f64, sum[1] / size as f64],
            size,
            min_gradient: gmin,
        });
    }
    Ok(CriticalPointReport {
        points,
        clusters,
        min_gradient,
        min_gradient_at: grid.point(min_node),
        max_gradient,
        threshold,
    })
}

/// Radial samples in `[r_lo, r_hi]` with `|u'| <= theta * max |u'|`, and the
/// smallest `|u'|` there.
pub fn radial_critical_points(u: &RadialSolution, r_lo: f64, r_hi: f64, theta: f64) -> Result<(Vec<f64>, f64)> {
    let max = u.du.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
    let inside: Vec<usize> = (0..u.r.len()).filter(|&i| u.r[i] >= r_lo && u.r[i] <= r_hi).collect();
    if inside.is_empty() {
        return Err(Error::EmptyRegion(format!("no radial samples in [{r_lo}, {r_hi}]")));
    }
    let min = inside.iter().map(|&i| u.du[i].abs()).fold(f64::INFINITY, f64::min);
    let crit = inside
        .iter()
        .filter(|&&i| u.du[i].abs() <= theta * max)
        .map(|&i| u.r[i])
        .collect();
    Ok((crit, min))
}
