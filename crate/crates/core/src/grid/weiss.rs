//! Weiss energies by ring quadrature.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::lattice::GeometryMode;
use super::{positivity_cut, GridError, GridField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeissSeries {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Monotonicity slack `10 h`.
    pub tolerance: f64,
}

impl WeissSeries {
    /// Largest drop `W(r_j) - W(r_{j+1})` along the ladder (0 if monotone).
    pub fn worst_drop(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.worst_drop() <= self.tolerance
    }

    /// `max W - min W`.
    pub fn spread(&self) -> f64 {
        let hi = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Reduced-plane ring parametrization around `center`.
struct Rings {
    center: [f64; 2],
    /// Angular extent of the sector.
    span: f64,
    /// Angular density `cos^{m-1} sin^{k-1}` times the orbit constant, or 1.
    split: Option<(i32, i32, f64)>,
    dim: i32,
}

impl Rings {
    fn new(field: &GridField, center: [f64; 2]) -> Result<Self, GridError> {
        let geom = field.geometry();
        match geom.mode {
            GeometryMode::Planar => Ok(Self {
                center,
                span: 2.0 * PI,
                split: None,
                dim: 2,
            }),
            GeometryMode::DoublePolar(s) => {
                if center[0].hypot(center[1]) > 1e-12 {
                    return Err(GridError::UnsupportedCenter(center));
                }
                Ok(Self {
                    center,
                    span: FRAC_PI_2,
                    split: Some((s.m as i32 - 1, s.k as i32 - 1, s.orbit_area::<f64>())),
                    dim: s.dim() as i32,
                })
            }
        }
    }

    /// Planar rings in the reduced plane regardless of the geometry mode.
    fn reduced(center: [f64; 2]) -> Self {
        Self {
            center,
            span: 2.0 * PI,
            split: None,
            dim: 2,
        }
    }

    #[inline]
    fn point(&self, s: f64, angle: f64) -> [f64; 2] {
        [
            self.center[0] + s * angle.cos(),
            self.center[1] + s * angle.sin(),
        ]
    }

    /// Angular weight so that `dmu = weight * s^{dim-1} ds dangle`.
    #[inline]
    fn weight(&self, angle: f64) -> f64 {
        match self.split {
            None => 1.0,
            Some((a, b, c)) => c * angle.cos().powi(a) * angle.sin().powi(b),
        }
    }

    fn angles(&self, s: f64, spacing: f64) -> usize {
        ((self.span * s / spacing).ceil() as usize).max(8)
    }

    /// `int_{B_b \ B_a} (|grad u|^2 + [u > cut]) dmu`, sampling the signed
    /// extension so that cells cut by the free boundary are split at its
    /// reconstructed position.
    fn shell(&self, field: &GridField, a: f64, b: f64, cut: f64) -> f64 {
        let h = field.h();
        let mid = 0.5 * (a + b);
        let n = self.angles(mid, 0.5 * h);
        let dth = self.span / n as f64;
        let radial = mid.powi(self.dim - 1) * (b - a) * dth;
        let mut sum = 0.0;
        for q in 0..n {
            let th = (q as f64 + 0.5) * dth;
            let (v, g) = field.sample_signed(self.point(mid, th));
            if v > cut {
                sum += (g[0] * g[0] + g[1] * g[1] + 1.0) * self.weight(th);
            } else if v > 0.0 {
                sum += (g[0] * g[0] + g[1] * g[1]) * self.weight(th);
            }
        }
        sum * radial
    }

    /// `int_{dB_r} u^2 dsigma`.
    fn sphere(&self, field: &GridField, r: f64) -> f64 {
        let n = self.angles(r, 0.25 * field.h());
        let dth = self.span / n as f64;
        let mut sum = 0.0;
        for q in 0..n {
            let th = (q as f64 + 0.5) * dth;
            let u = field.sample_signed(self.point(r, th)).0.max(0.0);
            sum += u * u * self.weight(th);
        }
        sum * r.powi(self.dim - 1) * dth
    }
}

/// Two-dimensional Weiss energy of the reduced-plane function around `center`.
///
/// Away from the axes a double-polar field is locally a function of two
/// variables times a flat factor, so its density at such a point is read off
/// this planar quantity.
pub(crate) fn reduced_weiss(field: &GridField, center: [f64; 2], r: f64) -> f64 {
    let rings = Rings::reduced(center);
    let h = field.h();
    let cut = positivity_cut(h);
    let pieces = (r / (0.5 * h)).ceil().max(1.0) as usize;
    let step = r / pieces as f64;
    let bulk: f64 = (0..pieces)
        .map(|q| rings.shell(field, q as f64 * step, (q + 1) as f64 * step, cut))
        .sum();
    bulk / (r * r) - rings.sphere(field, r) / (r * r * r)
}

/// Weiss energy at a single radius.
pub fn weiss_energy(field: &GridField, center: [f64; 2], r: f64) -> Result<f64, GridError> {
    Ok(weiss_series(field, center, &[r])?.values[0])
}

/// Weiss energies along an increasing radius ladder.
pub fn weiss_series(
    field: &GridField,
    center: [f64; 2],
    radii: &[f64],
) -> Result<WeissSeries, GridError> {
    let geom = field.geometry();
    let rings = Rings::new(field, center)?;
    let room = geom.boundary_distance(center);
    for (j, &r) in radii.iter().enumerate() {
        if !(r > 0.0) || r > room + 1e-12 {
            return Err(GridError::RadiusOutOfDomain {
                center,
                radius: r,
                room,
            });
        }
        if j > 0 && r <= radii[j - 1] {
            return Err(GridError::InvalidGeometry(format!(
                "radius ladder not increasing at {r}"
            )));
        }
    }
    let h = field.h();
    let cut = positivity_cut(h);
    let width = 0.5 * h;
    let mut bulk = 0.0;
    let mut inner = 0.0;
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let pieces = ((r - inner) / width).ceil().max(1.0) as usize;
        let step = (r - inner) / pieces as f64;
        for q in 0..pieces {
            let a = inner + q as f64 * step;
            bulk += rings.shell(field, a, a + step, cut);
        }
        inner = r;
        let d = rings.dim;
        values.push(bulk / r.powi(d) - rings.sphere(field, r) / r.powi(d + 1));
    }
    Ok(WeissSeries {
        center,
        radii: radii.to_vec(),
        values,
        tolerance: 10.0 * h,
    })
}
