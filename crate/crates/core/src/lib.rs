//! Multivariate Lorenz maps for bivariate allocations.
//!
//! An empirical allocation (weighted points in the positive quadrant with
//! unit coordinate means) is matched to the uniform distribution on the unit
//! square by solving a semi-discrete transport problem; the resulting power
//! diagram gives the Lorenz map, from which the inverse Lorenz function,
//! α-Lorenz curves, Gini indices and Lorenz orderings are computed.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod closed_forms;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod ingestion;
pub mod lorenz;
pub mod ordering;
pub mod ot_solver;
pub mod quad;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::Point;
