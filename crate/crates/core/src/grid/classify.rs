//! Point classification by Weiss density.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::lattice::{GeometryMode, NodeKind};
use super::weiss::{reduced_weiss, weiss_energy};
use super::{positivity_cut, GridError, GridField};

/// Smallest reliable Weiss radius, in grid spacings.
pub const MIN_WEISS_CELLS: f64 = 16.0;

/// Radius, in grid spacings, of the neighborhood whose signs decide between
/// interior, contact and free boundary points. Discrete free boundaries can
/// leave a zero cap a couple of cells wide at a singular point.
pub const SIGN_NEIGHBORHOOD_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Interior,
    Contact,
    Regular,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: PointClass,
    /// `W(u; p, 16h)` for free boundary points.
    pub density: Option<f64>,
    /// Density of the half-plane solution the value is compared with.
    pub flat_density: f64,
    /// Threshold `flat_density * (1 + relative_gap)`.
    pub threshold: f64,
}

/// Classifies `p` as interior, contact, regular or singular.
///
/// `relative_gap` is the fraction of the flat density a free boundary point
/// must exceed it by to count as singular.
pub fn classify_point(
    field: &GridField,
    p: [f64; 2],
    relative_gap: f64,
) -> Result<Classification, GridError> {
    let lat = field.lattice();
    let h = field.h();
    let cut = positivity_cut(h);
    let f = lat.locate(p);
    let mut pos = 0usize;
    let mut zero = 0usize;
    let (ci, cj) = (f[0].round() as isize, f[1].round() as isize);
    let span = SIGN_NEIGHBORHOOD_CELLS.ceil() as isize + 1;
    for j in cj - span..=cj + span {
        for i in ci - span..=ci + span {
            if i < 0 || j < 0 || i >= lat.nx as isize || j >= lat.ny as isize {
                continue;
            }
            let id = j as usize * lat.nx + i as usize;
            if lat.kind[id] == NodeKind::Outside {
                continue;
            }
            let q = lat.position_of(id);
            let (dx, dy) = match lat.geometry.mode {
                GeometryMode::Planar => (q[0] - p[0], q[1] - p[1]),
                GeometryMode::DoublePolar(_) => (q[0] - p[0].abs(), q[1] - p[1].abs()),
            };
            if dx.hypot(dy) <= SIGN_NEIGHBORHOOD_CELLS * h {
                if field.values()[id] > cut {
                    pos += 1;
                } else {
                    zero += 1;
                }
            }
        }
    }
    let at_origin = p[0].hypot(p[1]) <= 1e-12;
    let (flat, dp_offaxis) = match lat.geometry.mode {
        GeometryMode::Planar => (field.geometry().flat_density(), false),
        GeometryMode::DoublePolar(_) if at_origin => (field.geometry().flat_density(), false),
        GeometryMode::DoublePolar(_) => (FRAC_PI_2, true),
    };
    let threshold = flat * (1.0 + relative_gap);
    let simple = |class| Classification {
        class,
        density: None,
        flat_density: flat,
        threshold,
    };
    if zero == 0 {
        return Ok(simple(PointClass::Interior));
    }
    if pos == 0 {
        return Ok(simple(PointClass::Contact));
    }
    let r = MIN_WEISS_CELLS * h;
    let room = field.geometry().boundary_distance(p);
    if r > room {
        return Err(GridError::TooCoarse {
            point: p,
            required: r,
            available: room,
        });
    }
    let density = if dp_offaxis {
        reduced_weiss(field, p, r)
    } else {
        weiss_energy(field, p, r)?
    };
    let class = if density > threshold {
        PointClass::Singular
    } else {
        PointClass::Regular
    };
    Ok(Classification {
        class,
        density: Some(density),
        flat_density: flat,
        threshold,
    })
}
