//! Discrete solvers producing test solutions: the Shortley–Weller Laplacian,
//! the principal Dirichlet eigenpair, damped Newton for `-Δu = f(u)`, radial
//! shooting in dimension `N`, and critical-point detection.

mod critical;
mod eigen;
mod laplacian;
mod newton;
mod radial;

pub use critical::{critical_points, radial_critical_points, CriticalPointReport, DEFAULT_THETA};
pub use eigen::{principal_eigenpair, EigenPair, EigenSummary, EIGEN_MAX_ITERATIONS};
pub use laplacian::Laplacian;
pub use newton::{
    amplitude_ladder, solve_semilinear, solve_with_amplitudes, NewtonStats, DAMPING_FLOOR, NEWTON_MAX_ITERATIONS,
};
pub use radial::{solve_radial, RadialDomain, RadialField, RadialSolution, SHOOTING_BRACKET};
