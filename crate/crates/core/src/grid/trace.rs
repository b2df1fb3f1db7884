//! Boundary data.

use std::fmt;
use std::sync::Arc;

use crate::cone::{evaluate_cone, ConeProfile};

use super::GridField;

/// Signed boundary function; solvers use its positive part.
#[derive(Clone)]
pub enum Trace {
    Zero,
    Constant(f64),
    /// `x . normal - offset`.
    Flat {
        normal: [f64; 2],
        offset: f64,
    },
    /// Homogeneous cone `r g(theta)` in the reduced plane.
    Cone(Arc<ConeProfile<f64>>),
    /// Bilinear samples of another field.
    Sampled(Arc<GridField>),
    /// `base + shift`.
    Lifted {
        base: Arc<Trace>,
        shift: f64,
    },
    /// `scale * base(p / scale)`.
    Rescaled {
        base: Arc<Trace>,
        scale: f64,
    },
}

impl Trace {
    pub fn flat(normal: [f64; 2], offset: f64) -> Self {
        let n = normal[0].hypot(normal[1]);
        Self::Flat {
            normal: [normal[0] / n, normal[1] / n],
            offset,
        }
    }

    pub fn lifted(&self, shift: f64) -> Self {
        Self::Lifted {
            base: Arc::new(self.clone()),
            shift,
        }
    }

    pub fn rescaled(&self, scale: f64) -> Self {
        Self::Rescaled {
            base: Arc::new(self.clone()),
            scale,
        }
    }

    /// Signed value at `p`.
    pub fn signed(&self, p: [f64; 2]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Flat { normal, offset } => p[0] * normal[0] + p[1] * normal[1] - offset,
            Self::Cone(profile) => evaluate_cone(profile, p[0].abs(), p[1].abs()),
            Self::Sampled(field) => field.sample(p),
            Self::Lifted { base, shift } => base.signed(p) + shift,
            Self::Rescaled { base, scale } => scale * base.signed([p[0] / scale, p[1] / scale]),
        }
    }

    /// Positive part, the value imposed on Dirichlet nodes.
    pub fn value(&self, p: [f64; 2]) -> f64 {
        self.signed(p).max(0.0)
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Flat { normal, offset } => write!(f, "Flat({normal:?}, {offset})"),
            Self::Cone(p) => write!(f, "Cone(d={}, split={})", p.d, p.split),
            Self::Sampled(_) => write!(f, "Sampled"),
            Self::Lifted { base, shift } => write!(f, "Lifted({base:?}, {shift})"),
            Self::Rescaled { base, scale } => write!(f, "Rescaled({base:?}, {scale})"),
        }
    }
}
