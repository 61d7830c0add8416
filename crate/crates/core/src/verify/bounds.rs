use serde::Serialize;

use super::{CheckReport, Violation};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::grid::GridFunction;
use crate::kelvin::KelvinFrame;
use crate::nonlinearity::{check_hypotheses, Nonlinearity};
use crate::solver::{solve_radial, RadialDomain};

/// `C = (R / rho)^{N-2}` with `R` the outer radius of the normalized frame.
pub fn bound_constant(frame: &KelvinFrame, dim: u32) -> f64 {
    (frame.outer_radius / frame.rho).powi(dim as i32 - 2)
}

fn delta_max(u: &GridFunction, domain: &Domain, delta: f64) -> Option<f64> {
    u.max_over(
        u.interior_nodes()
            .filter(|&k| domain.signed_distance(u.grid.point(k)) < -delta),
    )
    .map(|m| m.1)
}

fn ratio(u: &GridFunction, domain: &Domain, delta: f64) -> Result<f64> {
    let (_, top) = u
        .max_interior()
        .ok_or_else(|| Error::EmptyRegion("grid function has no interior nodes".into()))?;
    let inner = delta_max(u, domain, delta)
        .ok_or_else(|| Error::EmptyRegion(format!("no grid nodes at distance > {delta} from the boundary")))?;
    if !(inner > 0.0) {
        return Err(Error::Domain(format!("max over the delta-interior is {inner}; u must be positive")));
    }
    Ok(top / inner)
}

/// Largest `delta` with `max u / max_{Omega_delta} u <= c`, by bisection on
/// `[0, inradius]`. `None` if even `delta = 0` fails.
pub fn largest_passing_delta(u: &GridFunction, domain: &Domain, c: f64) -> Result<Option<f64>> {
    let ok = |d: f64| ratio(u, domain, d).map(|r| r <= c);
    if !ok(0.0)? {
        return Ok(None);
    }
    let mut hi = u
        .interior_nodes()
        .map(|k| -domain.signed_distance(u.grid.point(k)))
        .fold(0.0, f64::max);
    // the deepest node itself is excluded at delta = hi
    let mut lo = 0.0;
    if matches!(ok(hi - 1e-12 * hi.max(1.0)), Ok(true)) {
        return Ok(Some(hi));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        match ok(mid) {
            Ok(true) => lo = mid,
            Ok(false) | Err(Error::EmptyRegion(_)) => hi = mid,
            Err(e) => return Err(e),
        }
        if hi - lo <= 1e-6 * u.grid.h {
            break;
        }
    }
    Ok(Some(lo))
}

/// `max u <= c * max_{Omega_delta} u`; the margin is `c - ratio`.
pub fn check_global_bound(u: &GridFunction, domain: &Domain, delta: f64, c: f64) -> Result<CheckReport> {
    if !(delta >= 0.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument("delta must be nonnegative and C positive".into()));
    }
    let r = ratio(u, domain, delta)?;
    let frontier = largest_passing_delta(u, domain, c)?;
    let mut report = CheckReport::new("global_bound", c - r, 0.0)
        .param("delta", delta)
        .param("C", c)
        .param("ratio", r)
        .param("largest_passing_delta", frontier);
    if r > c {
        let (k, _) = u.max_interior().unwrap();
        report = report.with_violations(vec![Violation {
            at: u.grid.point(k),
            amount: c - r,
            what: "max u exceeds C max over the delta-interior",
        }]);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Finite,
    /// Outside the growth hypotheses; any outcome is reported, not judged.
    OutOfHypothesis,
    /// In-hypothesis nonlinearity without a computed solution.
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessRow {
    pub label: String,
    pub in_hypothesis: bool,
    pub status: RowStatus,
    pub sup_norm: Option<f64>,
    /// `max u / max_{Omega_delta} u`.
    pub ratio: Option<f64>,
    pub shooting_parameter: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundednessTable {
    pub dim: u32,
    pub domain: RadialDomain,
    pub delta: f64,
    pub rows: Vec<BoundednessRow>,
    /// Set when an in-hypothesis row failed.
    pub flagged: bool,
}

/// Radial solves across a family of nonlinearities, tabulating `||u||_inf`.
/// Nonlinearities failing the subcritical surrogate are marked out of
/// hypothesis; their failures do not flag the table.
pub fn boundedness_experiment(
    dim: u32,
    domain: RadialDomain,
    family: &[Nonlinearity],
    delta: f64,
    tol: f64,
) -> Result<BoundednessTable> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty nonlinearity family".into()));
    }
    let (lo, hi) = (domain.inner() + delta, domain.outer() - delta);
    if !(lo < hi) {
        return Err(Error::EmptyRegion(format!("delta {delta} leaves no interior")));
    }
    let mut rows = Vec::with_capacity(family.len());
    for f in family {
        let in_hypothesis = match check_hypotheses(f, 1.0, 1e6, 200) {
            Ok(r) => r.h2.pass,
            Err(Error::NonFinite(_)) => false,
            Err(e) => return Err(e),
        };
        let row = match solve_radial(dim, f, domain, tol) {
            Ok(sol) => {
                let (_, top) = sol.max();
                let inner = sol
                    .r
                    .iter()
                    .zip(&sol.u)
                    .filter(|(r, _)| **r >= lo && **r <= hi)
                    .map(|(_, u)| *u)
                    .fold(f64::NEG_INFINITY, f64::max);
                BoundednessRow {
                    label: f.label.clone(),
                    in_hypothesis,
                    status: if in_hypothesis {
                        RowStatus::Finite
                    } else {
                        RowStatus::OutOfHypothesis
                    },
                    sup_norm: Some(top),
                    ratio: (inner > 0.0).then(|| top / inner),
                    shooting_parameter: Some(sol.shooting_parameter),
                    note: String::new(),
                }
            }
            Err(e) => BoundednessRow {
                label: f.label.clone(),
                in_hypothesis,
                status: if in_hypothesis {
                    RowStatus::Failed
                } else {
                    RowStatus::OutOfHypothesis
                },
                sup_norm: None,
                ratio: None,
                shooting_parameter: None,
                note: e.to_string(),
            },
        };
        rows.push(row);
    }
    if rows.iter().all(|r| r.sup_norm.is_none()) {
        return Err(Error::NoConvergence {
            method: "boundedness experiment",
            iterations: rows.len(),
            last_residual: f64::NAN,
            trace: Vec::new(),
        });
    }
    let flagged = rows.iter().any(|r| r.status == RowStatus::Failed);
    Ok(BoundednessTable {
        dim,
        domain,
        delta,
        rows,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kelvin::build_frame;

    #[test]
    fn disk_paraboloid_ratio_is_one() {
        let h = 1.0 / 32.0;
        let d = Domain::disk([0.0, 0.0], 1.0, 1.0, h).unwrap();
        let u = d.sample(h, |x| (1.0 - x[0] * x[0] - x[1] * x[1]) / 6.0).unwrap();
        let r = check_global_bound(&u, &d, 0.25, 3.0).unwrap();
        assert!(r.pass && (r.margin - 2.0).abs() < 1e-12);
        let frontier = r.params["largest_passing_delta"].as_f64().unwrap();
        assert!(frontier > 0.9, "{frontier}");
    }

    #[test]
    fn margin_is_monotone_in_delta() {
        let h = 1.0 / 32.0;
        let d = Domain::disk([0.0, 0.0], 1.0, 1.0, h).unwrap();
        let u = d.sample(h, |x| (-4.0 * ((x[0] - 0.5).powi(2) + x[1] * x[1])).exp()).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..9 {
            let r = check_global_bound(&u, &d, 0.1 * i as f64, 1.5).unwrap();
            assert!(r.margin <= last + 1e-15);
            last = r.margin;
        }
        let frontier = largest_passing_delta(&u, &d, 1.5).unwrap().unwrap();
        assert!(check_global_bound(&u, &d, frontier, 1.5).unwrap().pass);
        assert!(!check_global_bound(&u, &d, frontier + 2.0 * h, 1.5).unwrap().pass);
    }

    #[test]
    fn annulus_constant() {
        let d = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, 1.0 / 32.0).unwrap();
        let f = build_frame(&d, [1.0, 0.0], 0.5).unwrap();
        assert!((bound_constant(&f, 3) - 10.0).abs() < 1e-9);
        assert!((bound_constant(&f, 4) - 100.0).abs() < 1e-7);
    }

    #[test]
    fn empty_delta_interior_is_an_error() {
        let d = Domain::disk([0.0, 0.0], 1.0, 1.0, 0.1).unwrap();
        let u = d.sample(0.1, |_| 1.0).unwrap();
        assert!(matches!(check_global_bound(&u, &d, 1.5, 2.0), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn subcritical_powers_are_bounded_and_critical_is_flagged() {
        let mut family: Vec<Nonlinearity> = [2.0, 2.5, 3.0, 4.0]
            .iter()
            .map(|&p| Nonlinearity::power(p, 3).unwrap())
            .collect();
        family.push(Nonlinearity::staircase(2.0, 3.0, 2.0, 3, 5).unwrap());
        family.push(Nonlinearity::power(5.0, 3).unwrap());
        let t = boundedness_experiment(3, RadialDomain::Ball { radius: 1.0 }, &family, 0.1, 1e-10).unwrap();
        assert!(!t.flagged);
        for row in &t.rows[..5] {
            assert_eq!(row.status, RowStatus::Finite, "{row:?}");
            assert!(row.sup_norm.unwrap().is_finite());
        }
        let crit = &t.rows[5];
        assert!(!crit.in_hypothesis && crit.status == RowStatus::OutOfHypothesis);
    }
}
