//! Node layout, weights and geometry of the computational grids.

use serde::{Deserialize, Serialize};

use crate::cone::SymmetrySplit;
use crate::scalar::{ball_volume, sphere_area};

use super::GridError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryMode {
    /// Genuine two-dimensional problem.
    Planar,
    /// `O(m) x O(k)`-invariant functions on `R^{m+k}`, in `(rho, sigma)`.
    DoublePolar(SymmetrySplit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    /// Disk of radius `R` (planar) or quarter disk (double polar).
    Disk,
    /// `[-R, R]^2`; planar only.
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub mode: GeometryMode,
    pub shape: DomainShape,
    /// Extent `R`.
    pub radius: f64,
    /// Spacing `h`.
    pub h: f64,
}

impl GridGeometry {
    pub fn planar_disk(radius: f64, h: f64) -> Self {
        Self {
            mode: GeometryMode::Planar,
            shape: DomainShape::Disk,
            radius,
            h,
        }
    }

    pub fn planar_square(radius: f64, h: f64) -> Self {
        Self {
            mode: GeometryMode::Planar,
            shape: DomainShape::Square,
            radius,
            h,
        }
    }

    pub fn double_polar(split: SymmetrySplit, radius: f64, h: f64) -> Self {
        Self {
            mode: GeometryMode::DoublePolar(split),
            shape: DomainShape::Disk,
            radius,
            h,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(GridError::InvalidGeometry(format!(
                "spacing h = {}",
                self.h
            )));
        }
        if !(self.radius > 4.0 * self.h) || !self.radius.is_finite() {
            return Err(GridError::InvalidGeometry(format!(
                "radius {} too small for h = {}",
                self.radius, self.h
            )));
        }
        if let GeometryMode::DoublePolar(split) = self.mode {
            if split.m == 0 || split.k == 0 {
                return Err(GridError::InvalidGeometry(format!("split {split}")));
            }
            if self.shape != DomainShape::Disk {
                return Err(GridError::InvalidGeometry(
                    "double-polar grids use the quarter disk".into(),
                ));
            }
        }
        Ok(())
    }

    /// Dimension of the represented problem.
    pub fn dimension(&self) -> usize {
        match self.mode {
            GeometryMode::Planar => 2,
            GeometryMode::DoublePolar(s) => s.dim(),
        }
    }

    /// `|B_1| / 2` in the represented dimension.
    pub fn flat_density(&self) -> f64 {
        0.5 * ball_volume::<f64>(self.dimension())
    }

    /// Same geometry at spacing `h * factor`.
    pub fn rescaled_spacing(&self, factor: f64) -> Self {
        Self {
            h: self.h * factor,
            ..*self
        }
    }

    /// Distance from `p` to the outer boundary of the domain.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        match (self.mode, self.shape) {
            (_, DomainShape::Disk) => self.radius - p[0].hypot(p[1]),
            (GeometryMode::Planar, DomainShape::Square) => {
                (self.radius - p[0].abs()).min(self.radius - p[1].abs())
            }
            (GeometryMode::DoublePolar(_), DomainShape::Square) => f64::NAN,
        }
    }

    /// Density of the measure `dmu` in the reduced plane.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        match self.mode {
            GeometryMode::Planar => 1.0,
            GeometryMode::DoublePolar(s) => {
                let c = sphere_area::<f64>(s.m) * sphere_area::<f64>(s.k);
                c * x.abs().powi(s.m as i32 - 1) * y.abs().powi(s.k as i32 - 1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Dirichlet,
    Outside,
}

/// Rectangular node array covering the domain plus one ring of Dirichlet
/// nodes. Index `j * nx + i`, `i` along the first coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub geometry: GridGeometry,
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub kind: Vec<NodeKind>,
    /// Weight of the edge `(i, j) -> (i + 1, j)`.
    pub w_east: Vec<f64>,
    /// Weight of the edge `(i, j) -> (i, j + 1)`.
    pub w_north: Vec<f64>,
    /// Volume weight of each node.
    pub w_node: Vec<f64>,
}

impl Lattice {
    pub fn new(geometry: GridGeometry) -> Result<Self, GridError> {
        geometry.validate()?;
        let h = geometry.h;
        let r = geometry.radius;
        let (nx, ny, origin) = match geometry.mode {
            GeometryMode::Planar => {
                let n = (r / h - 1e-9).ceil() as usize;
                let count = 2 * n + 3;
                let o = -((n + 1) as f64) * h;
                (count, count, [o, o])
            }
            GeometryMode::DoublePolar(_) => {
                let n = (r / h).ceil() as usize + 2;
                (n, n, [0.5 * h, 0.5 * h])
            }
        };
        let mut lattice = Self {
            geometry,
            nx,
            ny,
            origin,
            kind: vec![NodeKind::Outside; nx * ny],
            w_east: vec![0.0; nx * ny],
            w_north: vec![0.0; nx * ny],
            w_node: vec![0.0; nx * ny],
        };
        let tol = 1e-9 * h;
        for j in 0..ny {
            for i in 0..nx {
                let [x, y] = lattice.position(i, j);
                let inside = match geometry.shape {
                    DomainShape::Disk => x.hypot(y) < r - tol,
                    DomainShape::Square => x.abs() < r - tol && y.abs() < r - tol,
                };
                if inside {
                    lattice.kind[j * nx + i] = NodeKind::Interior;
                }
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let id = j * nx + i;
                if lattice.kind[id] == NodeKind::Interior {
                    continue;
                }
                let touches = lattice
                    .neighbors(i, j)
                    .any(|(n, _)| lattice.kind[n] == NodeKind::Interior);
                if touches {
                    lattice.kind[id] = NodeKind::Dirichlet;
                }
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let id = j * nx + i;
                let [x, y] = lattice.position(i, j);
                lattice.w_node[id] = geometry.density(x, y);
                let active = |k: NodeKind| k != NodeKind::Outside;
                if i + 1 < nx && active(lattice.kind[id]) && active(lattice.kind[id + 1]) {
                    lattice.w_east[id] = geometry.density(x + 0.5 * h, y);
                }
                if j + 1 < ny && active(lattice.kind[id]) && active(lattice.kind[id + nx]) {
                    lattice.w_north[id] = geometry.density(x, y + 0.5 * h);
                }
            }
        }
        Ok(lattice)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.geometry.h;
        [self.origin[0] + i as f64 * h, self.origin[1] + j as f64 * h]
    }

    #[inline]
    pub fn position_of(&self, id: usize) -> [f64; 2] {
        self.position(id % self.nx, id / self.nx)
    }

    /// Existing 4-neighbors with the connecting edge weight.
    #[inline]
    pub fn neighbors(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let id = j * self.nx + i;
        let nx = self.nx;
        let w = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
        let east = (i + 1 < self.nx).then(|| (id + 1, w(&self.w_east, id)));
        let west = (i > 0).then(|| (id - 1, w(&self.w_east, id.wrapping_sub(1))));
        let north = (j + 1 < self.ny).then(|| (id + nx, w(&self.w_north, id)));
        let south = (j > 0).then(|| (id - nx, w(&self.w_north, id.wrapping_sub(nx))));
        east.into_iter().chain(west).chain(north).chain(south)
    }

    pub fn interior_count(&self) -> usize {
        self.kind
            .iter()
            .filter(|k| **k == NodeKind::Interior)
            .count()
    }

    /// Fractional lattice coordinates of a point in the reduced plane, with
    /// reflection across the axes in double-polar mode.
    pub fn locate(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = match self.geometry.mode {
            GeometryMode::Planar => (p[0], p[1]),
            GeometryMode::DoublePolar(_) => (p[0].abs(), p[1].abs()),
        };
        let h = self.geometry.h;
        [(x - self.origin[0]) / h, (y - self.origin[1]) / h]
    }
}
