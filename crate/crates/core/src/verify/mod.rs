//! Numerical pass/fail checks for the moving-plane and Kelvin theorems.

mod bounds;
mod kelvin;
mod moving_plane;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geometry::Point;
use crate::grid::GridFunction;

pub use bounds::{
    boundedness_experiment, bound_constant, check_global_bound, largest_passing_delta, BoundednessRow,
    BoundednessTable, RowStatus,
};
pub use kelvin::{check_g_reflection, check_image_no_critical, check_kelvin_no_critical, image_cap, GReflectionOptions};
pub use moving_plane::{
    check_cap_monotonicity, check_cap_monotonicity_all, check_max_location, min_directional_derivative,
    MonotonicityOptions, LAMBDA_SAMPLES,
};

/// Most violations kept in a report, worst first.
pub const MAX_VIOLATIONS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub at: Point,
    /// Signed amount; negative means the inequality fails by that much.
    pub amount: f64,
    pub what: &'static str,
}

/// Outcome of one check. `pass` holds iff `margin >= -tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
    /// Violations found before truncation to [`MAX_VIOLATIONS`].
    pub violation_count: usize,
    pub params: BTreeMap<String, serde_json::Value>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, margin: f64, tolerance: f64) -> Self {
        CheckReport {
            name: name.into(),
            pass: margin >= -tolerance,
            margin,
            tolerance,
            violations: Vec::new(),
            violation_count: 0,
            params: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Keeps the worst violations in a deterministic order.
    pub fn with_violations(mut self, mut found: Vec<Violation>) -> Self {
        self.violation_count = found.len();
        found.sort_by(|a, b| {
            a.amount
                .total_cmp(&b.amount)
                .then(a.at[0].total_cmp(&b.at[0]))
                .then(a.at[1].total_cmp(&b.at[1]))
        });
        found.truncate(MAX_VIOLATIONS);
        self.violations = found;
        self
    }

    /// Forces failure, e.g. when a qualitative condition fails.
    pub fn fail(mut self, why: impl Into<String>) -> Self {
        self.pass = false;
        self.notes.push(why.into());
        self
    }
}

/// Largest `|∇_h u|` over interior nodes.
pub fn gradient_scale(u: &GridFunction) -> f64 {
    u.interior_nodes()
        .map(|k| {
            let g = u.node_gradient(k);
            g[0].hypot(g[1])
        })
        .filter(|g| g.is_finite())
        .fold(0.0, f64::max)
}

/// Default pointwise tolerance `5 h ||∇u||_inf`.
pub fn default_tolerance(u: &GridFunction) -> f64 {
    5.0 * u.grid.h * gradient_scale(u)
}
