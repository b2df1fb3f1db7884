//! Discrete Hessians and regularity scales.

use super::lattice::{GeometryMode, NodeKind};
use super::GridField;

/// Frobenius norm of the discrete Hessian at an interior node.
///
/// Centered differences where both neighbors are positive, one-sided ones
/// otherwise. Double-polar fields include the orbit directions
/// `(m-1) (u_rho / rho)^2 + (k-1) (u_sigma / sigma)^2`.
pub fn hessian_norm(field: &GridField, id: usize) -> f64 {
    let lat = field.lattice();
    let u = field.values();
    let h = field.h();
    let (nx, ny) = (lat.nx as isize, lat.ny as isize);
    let (i, j) = ((id % lat.nx) as isize, (id / lat.nx) as isize);
    let reflect = matches!(lat.geometry.mode, GeometryMode::DoublePolar(_));
    let at = |a: isize, b: isize| -> Option<f64> {
        let a = if reflect && a < 0 { -a - 1 } else { a };
        let b = if reflect && b < 0 { -b - 1 } else { b };
        if a < 0 || b < 0 || a >= nx || b >= ny {
            return None;
        }
        let k = (b * nx + a) as usize;
        (lat.kind[k] != NodeKind::Outside).then(|| u[k])
    };
    let pos = |v: Option<f64>| v.filter(|x| *x > 0.0);
    let c = u[id];
    let second = |di: isize, dj: isize| -> f64 {
        let fwd = pos(at(i + di, j + dj));
        let bwd = pos(at(i - di, j - dj));
        match (fwd, bwd) {
            (Some(f), Some(b)) => (f - 2.0 * c + b) / (h * h),
            (Some(f), None) => match pos(at(i + 2 * di, j + 2 * dj)) {
                Some(ff) => (ff - 2.0 * f + c) / (h * h),
                None => 0.0,
            },
            (None, Some(b)) => match pos(at(i - 2 * di, j - 2 * dj)) {
                Some(bb) => (bb - 2.0 * b + c) / (h * h),
                None => 0.0,
            },
            (None, None) => 0.0,
        }
    };
    let uxx = second(1, 0);
    let uyy = second(0, 1);
    let diag = [(1, 1), (1, -1), (-1, 1), (-1, -1)].map(|(a, b)| pos(at(i + a, j + b)));
    let uxy = if diag.iter().all(Option::is_some) {
        let [pp, pm, mp, mm] = diag.map(Option::unwrap);
        (pp - pm - mp + mm) / (4.0 * h * h)
    } else {
        let mut found = 0.0;
        for (a, b) in [(1isize, 1isize), (1, -1), (-1, 1), (-1, -1)] {
            if let (Some(d), Some(x), Some(y)) =
                (pos(at(i + a, j + b)), pos(at(i + a, j)), pos(at(i, j + b)))
            {
                found = (d - x - y + c) * (a * b) as f64 / (h * h);
                break;
            }
        }
        found
    };
    let mut sq = uxx * uxx + 2.0 * uxy * uxy + uyy * uyy;
    if let GeometryMode::DoublePolar(split) = lat.geometry.mode {
        let [x, y] = lat.position_of(id);
        let d1 = |di: isize, dj: isize| -> f64 {
            match (at(i + di, j + dj), at(i - di, j - dj)) {
                (Some(f), Some(b)) => (f - b) / (2.0 * h),
                (Some(f), None) => (f - c) / h,
                (None, Some(b)) => (c - b) / h,
                (None, None) => 0.0,
            }
        };
        let gx = d1(1, 0) / x;
        let gy = d1(0, 1) / y;
        sq += (split.m - 1) as f64 * gx * gx + (split.k - 1) as f64 * gy * gy;
    }
    sq.sqrt()
}

/// Hessian norms of a field on its positive interior nodes, for repeated
/// regularity-scale queries.
#[derive(Debug, Clone)]
pub struct RegularityScaleField<'a> {
    field: &'a GridField,
    /// `|D^2 u|` per node; `None` off the positive set.
    hessian: Vec<Option<f64>>,
}

impl<'a> RegularityScaleField<'a> {
    pub fn new(field: &'a GridField) -> Self {
        let lat = field.lattice();
        let hessian = (0..lat.len())
            .map(|id| {
                (lat.kind[id] == NodeKind::Interior && field.values()[id] > 0.0)
                    .then(|| hessian_norm(field, id))
            })
            .collect();
        Self { field, hessian }
    }

    /// Largest `r <= dist(p, boundary)` with `|D^2 u| < 1/r` on the positive
    /// nodes of `B_r(p)`; 0 if that radius is below `2h`.
    pub fn scale_at(&self, p: [f64; 2]) -> f64 {
        let field = self.field;
        let lat = field.lattice();
        let h = field.h();
        let room = field.geometry().boundary_distance(p).max(0.0);
        let f = lat.locate(p);
        let mut half = 8.0 * h;
        loop {
            let reach = half.min(room + h);
            let span = (reach / h).ceil() as isize + 1;
            let mut near: Vec<(f64, f64)> = Vec::new();
            let (ci, cj) = (f[0].round() as isize, f[1].round() as isize);
            for j in (cj - span).max(0)..=(cj + span).min(lat.ny as isize - 1) {
                for i in (ci - span).max(0)..=(ci + span).min(lat.nx as isize - 1) {
                    let id = j as usize * lat.nx + i as usize;
                    if let Some(hs) = self.hessian[id] {
                        let q = lat.position_of(id);
                        let d = (q[0] - p[0]).hypot(q[1] - p[1]);
                        if d < reach {
                            near.push((d, hs));
                        }
                    }
                }
            }
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            let limit = room.min(reach);
            let best = scan(&near, limit);
            if best < reach || reach >= room {
                return if best >= 2.0 * h { best } else { 0.0 };
            }
            half *= 2.0;
        }
    }

    /// Whether `scale_at(p) > threshold`, looking only inside `B_threshold`.
    pub fn exceeds(&self, p: [f64; 2], threshold: f64) -> bool {
        let field = self.field;
        let lat = field.lattice();
        let h = field.h();
        if field.geometry().boundary_distance(p) <= threshold {
            return false;
        }
        if threshold < 2.0 * h {
            return self.scale_at(p) > threshold;
        }
        let f = lat.locate(p);
        let span = (threshold / h).ceil() as isize + 1;
        let (ci, cj) = (f[0].round() as isize, f[1].round() as isize);
        let mut worst = 0.0f64;
        for j in (cj - span).max(0)..=(cj + span).min(lat.ny as isize - 1) {
            for i in (ci - span).max(0)..=(ci + span).min(lat.nx as isize - 1) {
                let id = j as usize * lat.nx + i as usize;
                if let Some(hs) = self.hessian[id] {
                    let q = lat.position_of(id);
                    if (q[0] - p[0]).hypot(q[1] - p[1]) <= threshold {
                        worst = worst.max(hs);
                    }
                }
            }
        }
        worst * threshold < 1.0
    }
}

/// Supremum of admissible radii given `(distance, |D^2 u|)` pairs sorted by
/// distance and the cap `limit`.
fn scan(near: &[(f64, f64)], limit: f64) -> f64 {
    let mut running = 0.0f64;
    let mut lower = 0.0;
    let mut idx = 0;
    loop {
        let upper = near.get(idx).map_or(limit, |x| x.0).min(limit);
        let cap = if running > 0.0 {
            1.0 / running
        } else {
            f64::INFINITY
        };
        if cap <= lower {
            return lower;
        }
        let reach = upper.min(cap);
        if reach < upper || upper >= limit || idx >= near.len() {
            return reach;
        }
        // Absorb every node at this distance.
        let d = near[idx].0;
        while idx < near.len() && near[idx].0 <= d {
            running = running.max(near[idx].1);
            idx += 1;
        }
        lower = d;
    }
}

/// Regularity scale of `field` at `p`.
pub fn regularity_scale(field: &GridField, p: [f64; 2]) -> f64 {
    RegularityScaleField::new(field).scale_at(p)
}
