use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CheckReport, Violation};
use crate::error::{Error, Result};
use crate::geometry::{compute_lambda_star, MIN_ARM_FRACTION, dot, norm, reflect_unchecked, sub, CapSpec, Domain, Point};
use crate::grid::{RegionMask, ScalarField};
use crate::kelvin::{build_frame, kelvin_transform, transformed_nonlinearity, KelvinFrame, KelvinImage};
use crate::nonlinearity::Nonlinearity;
use crate::solver::critical_points;

/// Direction whose maximal cap of the image contains `e_1`, the image of the
/// base point.
const IMAGE_DIRECTION: Point = [-1.0, 0.0];

/// Maximal cap of the image domain in direction `-e_1`.
pub fn image_cap(image: &Domain) -> Result<CapSpec> {
    compute_lambda_star(image, IMAGE_DIRECTION, 1e-10)
}

/// No critical point of the Kelvin image in its maximal cap. The margin is
/// `min |∇v| - theta * max |∇v|`, both over cap nodes whose neighbors are
/// valid and whose stencil arms are not clamped.
pub fn check_image_no_critical(img: &KelvinImage, cap: &CapSpec, theta: f64) -> Result<CheckReport> {
    let mut v = img.v.clone();
    for k in 0..v.grid.len() {
        if v.interior[k] && !img.valid[k] {
            v.interior[k] = false;
            v.values[k] = 0.0;
        }
    }
    let grid = v.grid;
    let eps = 1e-9 * cap.lambda_star.abs().max(1.0);
    let usable = |k: usize| {
        img.valid[k]
            && img.v.fractions[k].iter().all(|&t| t > MIN_ARM_FRACTION)
            && grid
                .neighbors(k)
                .iter()
                .all(|n| n.is_some_and(|n| img.valid[n] || !img.v.interior[n]))
    };
    let region = RegionMask {
        grid,
        inside: (0..grid.len())
            .map(|k| usable(k) && dot(&grid.point(k), &cap.direction) < cap.lambda_star - eps)
            .collect(),
    };
    let largest_delta = img
        .valid_nodes()
        .map(|k| grid.point(k))
        .filter(|y| dot(y, &cap.direction) >= cap.lambda_star - eps)
        .map(|y| norm(&sub(y, [1.0, 0.0])))
        .fold(f64::INFINITY, f64::min);
    let grad = |k: usize| {
        let g = v.node_gradient(k);
        g[0].hypot(g[1])
    };
    let scale = v.interior_nodes().map(grad).fold(0.0, f64::max);
    let cap_scale = region.nodes().map(grad).fold(0.0, f64::max);
    let relative = if scale > 0.0 { theta * cap_scale / scale } else { theta };
    let report = critical_points(&v, &region, relative)?;
    let margin = report.min_gradient - report.threshold;
    let violations = report
        .clusters
        .iter()
        .map(|c| Violation {
            at: c.centroid,
            amount: c.min_gradient - report.threshold,
            what: "critical point in the transformed cap",
        })
        .collect();
    let mut out = CheckReport::new("kelvin_no_critical", margin, 0.0)
        .param("lambda_star", cap.lambda_star)
        .param("nu", cap.direction)
        .param("theta", theta)
        .param("min_gradient", report.min_gradient)
        .param("min_gradient_at", report.min_gradient_at)
        .param("gradient_scale", scale)
        .param("h_image", grid.h)
        .param("cap_gradient_scale", cap_scale)
        .param("min_gradient_over_h_scale", report.min_gradient / (grid.h * cap_scale))
        .param("cap_nodes", region.count())
        .param("largest_delta", largest_delta)
        .with_violations(violations);
    if !report.clusters.is_empty() {
        out = out.fail(format!("{} critical clusters in the cap", report.clusters.len()));
    }
    Ok(out)
}

/// Builds the frame at `x0`, transforms `u` and runs [`check_image_no_critical`]
/// on the maximal cap containing the image of `x0`.
pub fn check_kelvin_no_critical(
    u: &dyn ScalarField,
    domain: &Domain,
    x0: Point,
    rho: f64,
    dim: u32,
    h: f64,
    theta: f64,
) -> Result<CheckReport> {
    let frame = build_frame(domain, x0, rho)?;
    let img = kelvin_transform(u, domain, &frame, dim, h)?;
    let cap = image_cap(&img.domain)?;
    if cap.degenerate || !(cap.lambda_star > cap.lambda0) {
        return Err(Error::DegenerateCap(
            "transformed cap at the base point is degenerate; run the boundary convexity certificate".into(),
        ));
    }
    Ok(check_image_no_critical(&img, &cap, theta)?
        .param("x0", x0)
        .param("rho", rho)
        .param("R", frame.outer_radius))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GReflectionOptions {
    pub samples: usize,
    pub seed: u64,
    /// `s` is drawn log-uniformly from this range.
    pub s_range: (f64, f64),
    /// Tolerance on the relative gap `(g(y^l, s) - g(y, s)) / |g(y, s)|`.
    pub tolerance: f64,
}

impl Default for GReflectionOptions {
    fn default() -> Self {
        GReflectionOptions {
            samples: 1000,
            seed: 0,
            s_range: (1e-3, 1e3),
            tolerance: 1e-12,
        }
    }
}

/// `|y^l| <= |y|` and `g(y^l, s) >= g(y, s)` for random `y` in the image cap,
/// `l` between `y . nu` and `lambda*`, and `s` in the configured range.
pub fn check_g_reflection(
    f: &Nonlinearity,
    frame: &KelvinFrame,
    image: &Domain,
    cap: &CapSpec,
    dim: u32,
    opts: &GReflectionOptions,
) -> Result<CheckReport> {
    let g = transformed_nonlinearity(f, dim)?;
    let (s_lo, s_hi) = opts.s_range;
    if opts.samples == 0 || !(s_lo > 0.0 && s_lo < s_hi) {
        return Err(Error::InvalidArgument("need samples and 0 < s_lo < s_hi".into()));
    }
    let (lo, hi) = image.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut draws: Vec<(Point, f64, f64)> = Vec::with_capacity(opts.samples);
    let mut attempts = 0usize;
    while draws.len() < opts.samples {
        attempts += 1;
        if attempts > 1000 * opts.samples {
            return Err(Error::EmptyRegion("could not sample the transformed cap".into()));
        }
        let y = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
        let t = dot(&y, &cap.direction);
        if !(t < cap.lambda_star) || image.signed_distance(y) >= 0.0 {
            continue;
        }
        let lambda = t + (cap.lambda_star - t) * rng.random_range(0.0..=1.0);
        let s = (s_lo.ln() + (s_hi / s_lo).ln() * rng.random_range(0.0..=1.0)).exp();
        draws.push((y, lambda, s));
    }
    let (r_in, slack) = (frame.inner_radius(), 1e-9);
    if let Some((y, ..)) = draws.iter().find(|(y, ..)| {
        let r = norm(y);
        r < r_in * (1.0 - slack) || r > 1.0 + slack
    }) {
        return Err(Error::Domain(format!(
            "cap sample ({}, {}) leaves the shell {r_in} <= |y| <= 1",
            y[0], y[1]
        )));
    }
    let rows: Vec<(f64, Option<Violation>, f64)> = draws
        .par_iter()
        .map(|&(y, lambda, s)| {
            let yl = reflect_unchecked(y, cap.direction, lambda);
            let (r, rl) = (norm(&y), norm(&yl));
            if rl > r * (1.0 + 1e-12) {
                let v = Violation {
                    at: y,
                    amount: r - rl,
                    what: "|y^lambda| > |y|",
                };
                return Ok((r - rl, Some(v), r - rl));
            }
            let base = g.eval_radius(r, s)?;
            let gap = g.eval_radius(rl, s)? - base;
            let rel = if base != 0.0 { gap / base.abs() } else { gap };
            if !rel.is_finite() {
                return Err(Error::NonFinite(format!("g at |y| = {r}, s = {s}")));
            }
            let v = (rel < -opts.tolerance).then_some(Violation {
                at: y,
                amount: rel,
                what: "g(y^lambda, s) < g(y, s)",
            });
            Ok((rel, v, r - rl))
        })
        .collect::<Result<_>>()?;
    let margin = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let off_sphere = rows
        .iter()
        .filter(|r| r.2 > 1e-3)
        .map(|r| r.0)
        .fold(f64::INFINITY, f64::min);
    let violations: Vec<Violation> = rows.into_iter().filter_map(|r| r.1).collect();
    let mut report = CheckReport::new("g_reflection", margin, opts.tolerance)
        .param("samples", opts.samples)
        .param("seed", opts.seed)
        .param("s_range", [s_lo, s_hi])
        .param("lambda_star", cap.lambda_star)
        .param("min_gap_off_sphere", off_sphere)
        .with_violations(violations);
    if report.violation_count > 0 && report.pass {
        report = report.fail("radius increased under reflection");
    }
    Ok(report)
}
