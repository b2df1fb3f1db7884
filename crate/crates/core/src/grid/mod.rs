//! Discrete one-phase energy minimization on two-dimensional grids.
//!
//! Planar grids represent genuine two-dimensional problems. Double-polar
//! grids carry `O(m) x O(k)`-invariant functions on `R^{m+k}` through the
//! weight `C rho^{m-1} sigma^{k-1}`, so every integral computed here is the
//! full `d`-dimensional one.

mod classify;
mod contour;
mod field;
mod lattice;
mod multigrid;
mod scale;
mod trace;
mod weiss;

pub use classify::{
    classify_point, Classification, PointClass, MIN_WEISS_CELLS, SIGN_NEIGHBORHOOD_CELLS,
};
pub use contour::{free_boundary, FreeBoundaryCurve};
pub use field::{minimize, relax_from, GridField, MinimizeOptions, SolveStats};
pub use lattice::{DomainShape, GeometryMode, GridGeometry, Lattice, NodeKind};
pub use multigrid::{HarmonicSolver, SolveReport};
pub use scale::{hessian_norm, regularity_scale, RegularityScaleField};
pub use trace::Trace;
pub use weiss::{weiss_energy, weiss_series, WeissSeries};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("relaxation did not settle within {sweeps} sweeps (last decrease {last_decrease:e})")]
    SweepLimitExceeded {
        sweeps: usize,
        last_decrease: f64,
        field: Box<GridField>,
    },
    #[error("energy increased in sweep {sweep}: {before} -> {after}")]
    EnergyIncreased {
        sweep: usize,
        before: f64,
        after: f64,
    },
    #[error("no free boundary: the positive set is empty or fills the domain")]
    EmptyBoundary,
    #[error("radius {radius} at {center:?} leaves the domain (room {room})")]
    RadiusOutOfDomain {
        center: [f64; 2],
        radius: f64,
        room: f64,
    },
    #[error("double-polar balls must be centered at the origin, got {0:?}")]
    UnsupportedCenter([f64; 2]),
    #[error("grid too coarse at {point:?}: need radius {required}, have {available}")]
    TooCoarse {
        point: [f64; 2],
        required: f64,
        available: f64,
    },
    #[error("field data has {got} nodes, geometry needs {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Positivity threshold `h^2` separating zeros from harmonic tails.
pub fn positivity_cut(h: f64) -> f64 {
    h * h
}
