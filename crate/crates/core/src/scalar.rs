//! Scalar abstraction shared by the cone and spectrum code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the one-dimensional numerics are written against.
///
/// Implemented for `f32` and `f64`. The grid solver works in `f64` only.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold it,
    /// which does not happen for `f32`/`f64` and finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Area of the unit sphere `S^{n-1}` sitting in `R^n` (`n >= 1`; `|S^0| = 2`).
pub fn sphere_area<T: Real>(n: usize) -> T {
    assert!(n >= 1, "sphere in R^0 is undefined");
    let two_pi = T::lit(2.0) * T::PI();
    let mut area = if n % 2 == 1 { T::lit(2.0) } else { two_pi };
    let mut dim = if n % 2 == 1 { 1 } else { 2 };
    while dim < n {
        // |S^{dim+1}| = 2 pi / dim * |S^{dim-1}|
        area = area * two_pi / T::from_usize_lossy(dim);
        dim += 2;
    }
    area
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume<T: Real>(n: usize) -> T {
    sphere_area::<T>(n) / T::from_usize_lossy(n)
}
