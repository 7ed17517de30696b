//! Numerical kernels for the geometrically nonlinear Cosserat shell model:
//! surface geometry, strain measures, energy densities for every model
//! variant, thickness and coercivity checks, bending-tensor invariance and a
//! finite-difference midsurface energy minimizer.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bending_invariance;
pub mod constraints_coercivity;
pub mod energy_forms;
pub mod error;
pub mod minimizer;
pub mod sampling;
pub mod strain_measures;
pub mod surface_geometry;
mod taylor;
pub mod tensor_algebra;

pub use error::{Result, ShellError};
