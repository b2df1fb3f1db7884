//! Numerical toolkit for one-phase free boundary problems: homogeneous
//! cones with double-polar symmetry, their linearized spectra, and grid
//! minimizers of the one-phase energy.

// `!(x > 0.0)` deliberately rejects NaN; stencils index by node id.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cone;
pub mod grid;
pub mod ode;
pub mod quadrature;
pub mod scalar;
pub mod spectrum;
pub mod sweep;
pub mod tridiag;

pub use cone::{ConeError, ConeProfile, SymmetrySplit};
pub use grid::{GridError, GridField, GridGeometry};
pub use scalar::Real;
pub use spectrum::{EigenResult, SpectrumError};

/// Double-precision cone profile.
pub type ConeProfile64 = ConeProfile<f64>;
/// Single-precision cone profile.
pub type ConeProfile32 = ConeProfile<f32>;
/// Double-precision eigenpair.
pub type EigenResult64 = EigenResult<f64>;
/// Single-precision eigenpair.
pub type EigenResult32 = EigenResult<f32>;
