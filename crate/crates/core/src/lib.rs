//! Level-set curvature flows on Riemannian surfaces.
//!
//! The crate is organised bottom-up: [`manifold`] samples metrics on chart
//! grids and provides geodesic machinery, [`operators`] evaluates the
//! curvature operators `F(ζ, A)`, [`solver`] integrates `u_t + F(Du, D²u) = 0`
//! explicitly, [`levelsets`] extracts and measures fronts, and
//! [`experiments`] wires them into named scenarios.

pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod levelsets;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
