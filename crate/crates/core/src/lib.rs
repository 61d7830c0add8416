//! Moving-plane caps, Kelvin transforms and a priori bound experiments for
//! semilinear Dirichlet problems `-Δu = f(u)` in planar domains.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod convexity;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod kelvin;
pub mod nonlinearity;
pub mod pipeline;
pub mod report;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
