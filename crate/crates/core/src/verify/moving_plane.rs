use rayon::prelude::*;

use super::{default_tolerance, CheckReport, Violation};
use crate::error::{Error, Result};
use crate::geometry::{compute_lambda_star, direction_set, dot, reflect_unchecked, CapSpec, Domain, Point};
use crate::grid::{GridFunction, RegionMask, ScalarField};

/// Interior `lambda` values sampled per cap.
pub const LAMBDA_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityOptions {
    pub lambda_samples: usize,
    /// Pointwise tolerance; `None` selects `5 h ||∇u||_inf`.
    pub tolerance: Option<f64>,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        MonotonicityOptions {
            lambda_samples: LAMBDA_SAMPLES,
            tolerance: None,
        }
    }
}

/// Smallest `∂u/∂nu` over interior nodes with `x . nu < level`.
pub fn min_directional_derivative(u: &GridFunction, nu: Point, level: f64) -> Option<(f64, Point)> {
    u.interior_nodes()
        .map(|k| (k, u.grid.point(k)))
        .filter(|(_, x)| dot(x, &nu) < level)
        .map(|(k, x)| (dot(&u.node_gradient(k), &nu), x))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// `u(x) <= u(x^lambda)` on sampled caps and `∂u/∂nu >= 0` on the maximal cap,
/// both up to the tolerance. Nodes within one grid spacing of a plane are
/// skipped, since there both sides agree to interpolation accuracy.
pub fn check_cap_monotonicity(u: &GridFunction, cap: &CapSpec, opts: &MonotonicityOptions) -> Result<CheckReport> {
    if cap.degenerate || !(cap.lambda_star > cap.lambda0) {
        return Err(Error::DegenerateCap(format!(
            "cap in direction ({}, {}) has no interior (lambda0 {}, lambda* {})",
            cap.direction[0], cap.direction[1], cap.lambda0, cap.lambda_star
        )));
    }
    if opts.lambda_samples == 0 {
        return Err(Error::InvalidArgument("at least one lambda sample is required".into()));
    }
    let tol = opts.tolerance.unwrap_or_else(|| default_tolerance(u));
    let nu = cap.direction;
    let h = u.grid.h;
    let n = opts.lambda_samples;
    let lambdas: Vec<f64> = (1..=n)
        .map(|i| cap.lambda0 + (cap.lambda_star - cap.lambda0) * i as f64 / n as f64)
        .collect();
    let nodes: Vec<(usize, Point)> = u.interior_nodes().map(|k| (k, u.grid.point(k))).collect();

    let per_lambda: Vec<(f64, Vec<Violation>, usize)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let mut margin = f64::INFINITY;
            let mut bad = Vec::new();
            let mut skipped = 0;
            for &(k, x) in &nodes {
                if dot(&x, &nu) >= lambda - h {
                    continue;
                }
                let Some(reflected) = u.value(reflect_unchecked(x, nu, lambda)) else {
                    skipped += 1;
                    continue;
                };
                let m = reflected - u.values[k];
                margin = margin.min(m);
                if m < -tol {
                    bad.push(Violation {
                        at: x,
                        amount: m,
                        what: "u(x) > u(x^lambda)",
                    });
                }
            }
            (margin, bad, skipped)
        })
        .collect();

    let mut margin = f64::INFINITY;
    let mut violations = Vec::new();
    let mut skipped = 0;
    for (m, bad, s) in per_lambda {
        margin = margin.min(m);
        violations.extend(bad);
        skipped += s;
    }
    let mut min_derivative = f64::INFINITY;
    for &(k, x) in &nodes {
        if dot(&x, &nu) >= cap.lambda_star - h {
            continue;
        }
        let d = dot(&u.node_gradient(k), &nu);
        min_derivative = min_derivative.min(d);
        if d < -tol {
            violations.push(Violation {
                at: x,
                amount: d,
                what: "du/dnu < 0",
            });
        }
    }
    margin = margin.min(min_derivative);
    if !margin.is_finite() {
        return Err(Error::EmptyRegion("no grid nodes in the sampled caps".into()));
    }
    let mut report = CheckReport::new("cap_monotonicity", margin, tol)
        .param("nu", nu)
        .param("lambda0", cap.lambda0)
        .param("lambda_star", cap.lambda_star)
        .param("lambda_samples", n)
        .param("min_directional_derivative", min_derivative)
        .with_violations(violations);
    if skipped > 0 {
        report = report.note(format!("{skipped} reflected points fell off the grid"));
    }
    Ok(report)
}

/// Runs [`check_cap_monotonicity`] over `n_directions` uniform directions and
/// merges the results in direction order. The merged margin is the smallest
/// one; `params.worst_direction` records where it occurred.
pub fn check_cap_monotonicity_all(
    u: &GridFunction,
    domain: &Domain,
    n_directions: usize,
    opts: &MonotonicityOptions,
) -> Result<CheckReport> {
    let caps: Vec<CapSpec> = direction_set(n_directions)
        .into_par_iter()
        .map(|nu| compute_lambda_star(domain, nu, 1e-10))
        .collect::<Result<_>>()?;
    let tol = opts.tolerance.unwrap_or_else(|| default_tolerance(u));
    let opts = MonotonicityOptions {
        tolerance: Some(tol),
        ..*opts
    };
    let reports: Vec<Option<CheckReport>> = caps
        .par_iter()
        .map(|cap| match check_cap_monotonicity(u, cap, &opts) {
            Ok(r) => Ok(Some(r)),
            Err(Error::DegenerateCap(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut margin = f64::INFINITY;
    let mut worst = 0;
    let mut violations = Vec::new();
    let mut degenerate = 0;
    for (i, r) in reports.iter().enumerate() {
        let Some(r) = r else {
            degenerate += 1;
            continue;
        };
        if r.margin < margin {
            margin = r.margin;
            worst = i;
        }
        violations.extend(r.violations.iter().cloned());
    }
    if !margin.is_finite() {
        return Err(Error::DegenerateCap("every sampled cap is degenerate".into()));
    }
    let mut report = CheckReport::new("cap_monotonicity", margin, tol)
        .param("directions", n_directions)
        .param("worst_direction", caps[worst].direction)
        .param("lambda_samples", opts.lambda_samples)
        .with_violations(violations);
    if degenerate > 0 {
        report = report.note(format!("{degenerate} degenerate caps skipped"));
    }
    Ok(report)
}

/// `max over the complement of the optimal cap set - max over the domain`;
/// zero when the maximum is attained in the complement.
pub fn check_max_location(u: &GridFunction, complement: &RegionMask, tol: f64) -> Result<CheckReport> {
    if complement.grid != u.grid {
        return Err(Error::InvalidArgument("mask and grid function use different grids".into()));
    }
    let (k_all, max_all) = u
        .max_interior()
        .ok_or_else(|| Error::EmptyRegion("grid function has no interior nodes".into()))?;
    let (k_out, max_out) = u
        .max_over(complement.nodes().filter(|&k| u.interior[k]))
        .ok_or_else(|| {
            Error::EmptyRegion("complement of the optimal cap set is empty; sample more directions".into())
        })?;
    let margin = max_out - max_all;
    let mut report = CheckReport::new("max_location", margin, tol)
        .param("max_domain", max_all)
        .param("max_domain_at", u.grid.point(k_all))
        .param("max_complement", max_out)
        .param("max_complement_at", u.grid.point(k_out));
    if margin < -tol {
        report = report.with_violations(vec![Violation {
            at: u.grid.point(k_all),
            amount: margin,
            what: "maximum inside the optimal cap set",
        }]);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{optimal_cap_set, Domain};

    fn disk(h: f64) -> Domain {
        Domain::disk([0.0, 0.0], 1.0, 10.0, h).unwrap()
    }

    #[test]
    fn poisson_paraboloid_is_monotone() {
        let h = 1.0 / 32.0;
        let d = disk(h);
        let u = d.sample(h, |x| (1.0 - x[0] * x[0] - x[1] * x[1]) / 4.0).unwrap();
        let cap = compute_lambda_star(&d, [1.0, 0.0], 1e-10).unwrap();
        let r = check_cap_monotonicity(&u, &cap, &MonotonicityOptions::default()).unwrap();
        assert!(r.pass && r.margin > -1e-12, "{r:?}");
        for eps in [0.25, 0.5] {
            let (m, _) = min_directional_derivative(&u, [1.0, 0.0], -eps).unwrap();
            assert!((m - eps / 2.0).abs() <= 2.0 * h, "{m}");
        }
    }

    #[test]
    fn interior_saddle_is_located() {
        let h = 1.0 / 32.0;
        let d = disk(h);
        let u = d
            .sample(h, |x| (std::f64::consts::TAU * x[0]).sin() * (1.0 - x[0] * x[0] - x[1] * x[1]))
            .unwrap();
        let cap = compute_lambda_star(&d, [1.0, 0.0], 1e-10).unwrap();
        let r = check_cap_monotonicity(&u, &cap, &MonotonicityOptions::default()).unwrap();
        assert!(!r.pass);
        assert!(!r.violations.is_empty() && r.violations.iter().all(|v| v.at[0] < 0.0));
        assert!(r.violations.windows(2).all(|w| w[0].amount <= w[1].amount));
    }

    #[test]
    fn degenerate_caps_are_errors() {
        let cap = CapSpec {
            direction: [1.0, 0.0],
            lambda0: 0.0,
            lambda_star: 0.0,
            degenerate: true,
        };
        let u = disk(0.1).sample(0.1, |_| 1.0).unwrap();
        assert!(matches!(
            check_cap_monotonicity(&u, &cap, &MonotonicityOptions::default()),
            Err(Error::DegenerateCap(_))
        ));
    }

    #[test]
    fn max_location_on_the_disk() {
        let h = 1.0 / 32.0;
        let d = disk(h);
        let u = d.sample(h, |x| (1.0 - x[0] * x[0] - x[1] * x[1]) / 4.0).unwrap();
        let star = optimal_cap_set(&d, 16, 1e-10).unwrap();
        let r = check_max_location(&u, &star.complement, 1e-12).unwrap();
        assert!(r.pass && r.margin == 0.0);
        // a bump moved into a cap fails
        let shifted = d
            .sample(h, |x| (-(x[0] + 0.6).powi(2) * 20.0 - x[1] * x[1] * 20.0).exp())
            .unwrap();
        let r = check_max_location(&shifted, &star.complement, 1e-3).unwrap();
        assert!(!r.pass && r.violations.len() == 1);
        assert!(matches!(
            check_max_location(&u, &RegionMask::empty(u.grid), 0.0),
            Err(Error::EmptyRegion(_))
        ));
    }
}
