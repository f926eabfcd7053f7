//! Numerical laboratory for rupture solutions of `Δu = u^{-p}`.
//!
//! * [`field`]: grids, fields, finite differences, quadrature.
//! * [`solver`]: regularized Dirichlet solver and pull-in continuation.
//! * [`profiles`]: exact radial solutions and angular profiles.
//! * [`diagnostics`]: monotone energy, density, growth ratios, frequency.
//! * [`blowup`]: blow-up rescalings and homogeneity tests.
//! * [`rupture`]: sublevel sets, box counting, discreteness.
//! * [`cli`]: the batch commands behind the `rupture-lab` binary.

pub mod blowup;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod numerics;
pub mod profiles;
pub mod rupture;
pub mod solver;

mod linalg;

pub use error::{Error, Result};
