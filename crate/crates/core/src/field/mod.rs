//! Grids, fields, finite differences and ball/sphere quadrature.

mod grid;
pub mod io;
mod ops;
pub mod quadrature;
mod scalar;

pub use grid::{DomainKind, Grid, Point};
pub use ops::{gradient, interpolate, interpolate_gradient, laplacian};
#[allow(unused_imports)]
pub(crate) use ops::{grad_at, interpolate_gradient_values, interpolate_values, laplacian_at};
pub use quadrature::{ball_integral, ball_integral_with, radial_derivative, sphere_integral, sphere_integral_with, Sample};
pub(crate) use scalar::check_finite;
pub use scalar::{ScalarField, VectorField};
