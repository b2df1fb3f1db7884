//! Free boundary extraction by marching squares.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lattice::NodeKind;
use super::{positivity_cut, GridError, GridField};

/// Fit radius for the flatness deficit, in grid spacings.
const FIT_RADIUS_CELLS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryCurve {
    /// Connected chains of contour vertices.
    pub polylines: Vec<Vec<[f64; 2]>>,
    /// Flatness deficit per vertex, parallel to `polylines`.
    pub deficits: Vec<Vec<f64>>,
    pub h: f64,
}

impl FreeBoundaryCurve {
    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polylines.iter().flatten().copied()
    }

    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.polylines
            .iter()
            .flat_map(|l| l.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }

    /// Euclidean distance from `p` to the nearest segment (or lone vertex).
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        for line in &self.polylines {
            if line.len() == 1 {
                best = best.min(dist(p, line[0]));
            }
            for w in line.windows(2) {
                best = best.min(point_segment_distance(p, w[0], w[1]));
            }
        }
        best
    }

    /// Symmetric Hausdorff distance between the vertex sets, measured
    /// against the other curve's segments.
    pub fn hausdorff(&self, other: &FreeBoundaryCurve) -> f64 {
        let a = self
            .vertices()
            .map(|v| other.distance_to(v))
            .fold(0.0, f64::max);
        let b = other
            .vertices()
            .map(|v| self.distance_to(v))
            .fold(0.0, f64::max);
        a.max(b)
    }

    /// Smallest distance between the two curves, sampled at vertices.
    pub fn gap(&self, other: &FreeBoundaryCurve) -> f64 {
        let a = self
            .vertices()
            .map(|v| other.distance_to(v))
            .fold(f64::INFINITY, f64::min);
        let b = other
            .vertices()
            .map(|v| self.distance_to(v))
            .fold(f64::INFINITY, f64::min);
        a.min(b)
    }

    /// Keeps the vertices for which `keep` holds, splitting chains.
    pub fn restricted(&self, keep: impl Fn([f64; 2]) -> bool) -> FreeBoundaryCurve {
        let mut polylines = Vec::new();
        let mut deficits = Vec::new();
        for (line, def) in self.polylines.iter().zip(&self.deficits) {
            let mut cur = Vec::new();
            let mut cur_d = Vec::new();
            for (v, d) in line.iter().zip(def) {
                if keep(*v) {
                    cur.push(*v);
                    cur_d.push(*d);
                } else if !cur.is_empty() {
                    polylines.push(std::mem::take(&mut cur));
                    deficits.push(std::mem::take(&mut cur_d));
                }
            }
            if !cur.is_empty() {
                polylines.push(cur);
                deficits.push(cur_d);
            }
        }
        FreeBoundaryCurve {
            polylines,
            deficits,
            h: self.h,
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Lattice edge carrying a contour vertex: `(node id, 0 = east | 1 = north)`.
type EdgeKey = (usize, u8);

/// Contour of `{u > h^2}` with per-vertex flatness deficits.
pub fn free_boundary(field: &GridField) -> Result<FreeBoundaryCurve, GridError> {
    let lat = field.lattice();
    let u = field.values();
    let h = field.h();
    let cut = positivity_cut(h);
    let nx = lat.nx;
    let inside = |id: usize| u[id] > cut;

    // Vertices sit on the level set of the signed extension, which places
    // them correctly when one end of the edge is a zero node.
    let signed = field.signed_values();
    let edge_vertex = |(a, dir): EdgeKey| -> [f64; 2] {
        let b = if dir == 0 { a + 1 } else { a + nx };
        let t = ((cut - signed[a]) / (signed[b] - signed[a])).clamp(0.0, 1.0);
        let pa = lat.position_of(a);
        let pb = lat.position_of(b);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut any_pos = false;
    let mut any_zero = false;
    for j in 0..lat.ny - 1 {
        for i in 0..nx - 1 {
            let c = [
                j * nx + i,
                j * nx + i + 1,
                (j + 1) * nx + i + 1,
                (j + 1) * nx + i,
            ];
            if c.iter().any(|&id| lat.kind[id] == NodeKind::Outside) {
                continue;
            }
            let s: Vec<bool> = c.iter().map(|&id| inside(id)).collect();
            any_pos |= s.iter().any(|b| *b);
            any_zero |= s.iter().any(|b| !*b);
            // Cell edges counterclockwise: bottom, right, top, left.
            let edges: [EdgeKey; 4] = [(c[0], 0), (c[1], 1), (c[3], 0), (c[0], 1)];
            let crossing: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let centre = 0.25 * c.iter().map(|&id| u[id]).sum::<f64>() > cut;
                    // Corners 0 and 2 share a sign; join the edges so that
                    // the centre's side stays connected.
                    if centre == s[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[0], edges[3]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    if segments.is_empty() || !any_pos || !any_zero {
        return Err(GridError::EmptyBoundary);
    }

    let polylines_keys = chain(&segments);
    let polylines: Vec<Vec<[f64; 2]>> = polylines_keys
        .iter()
        .map(|l| l.iter().map(|k| edge_vertex(*k)).collect())
        .collect();
    let deficits = polylines
        .iter()
        .map(|l| l.iter().map(|v| flatness_deficit(field, *v)).collect())
        .collect();
    Ok(FreeBoundaryCurve {
        polylines,
        deficits,
        h,
    })
}

/// Joins segments sharing an edge vertex into maximal chains.
fn chain(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(s);
        incident.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start: EdgeKey, first: usize, used: &mut Vec<bool>| -> Vec<EdgeKey> {
        let mut out = vec![start];
        let mut at = start;
        let mut seg = Some(first);
        while let Some(s) = seg {
            used[s] = true;
            let (a, b) = segments[s];
            at = if a == at { b } else { a };
            out.push(at);
            seg = incident[&at].iter().copied().find(|&t| !used[t]);
        }
        out
    };
    // Open chains start at vertices of odd degree.
    let mut keys: Vec<&EdgeKey> = incident.keys().collect();
    keys.sort();
    for key in &keys {
        let segs = &incident[*key];
        if segs.len() == 1 && !used[segs[0]] {
            lines.push(walk(**key, segs[0], &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(segments[s].0, s, &mut used));
        }
    }
    lines
}

/// `min (1/r) sup_{B_r(q)} |u - (x.e - c)_+|` over a small family of
/// half-plane solutions, `r = 8h`.
pub(crate) fn flatness_deficit(field: &GridField, q: [f64; 2]) -> f64 {
    let lat = field.lattice();
    let u = field.values();
    let h = field.h();
    let r = FIT_RADIUS_CELLS * h;
    let f = lat.locate(q);
    let span = (r / h).ceil() as isize + 1;
    let mut nodes: Vec<([f64; 2], f64)> = Vec::new();
    let mut grad = [0.0, 0.0];
    for dj in -span..=span {
        for di in -span..=span {
            let i = f[0].round() as isize + di;
            let j = f[1].round() as isize + dj;
            if i < 0 || j < 0 || i >= lat.nx as isize || j >= lat.ny as isize {
                continue;
            }
            let id = j as usize * lat.nx + i as usize;
            if lat.kind[id] == NodeKind::Outside {
                continue;
            }
            let p = lat.position_of(id);
            if dist(p, q) <= r {
                nodes.push((p, u[id]));
                if u[id] > 0.0 {
                    let g = field.gradient(p);
                    grad[0] += g[0];
                    grad[1] += g[1];
                }
            }
        }
    }
    let norm = grad[0].hypot(grad[1]);
    if nodes.is_empty() || norm == 0.0 {
        return f64::NAN;
    }
    let base = grad[1].atan2(grad[0]);
    let mut best = f64::INFINITY;
    for a in -4..=4 {
        let ang = base + 0.05 * a as f64;
        let e = [ang.cos(), ang.sin()];
        let c0 = q[0] * e[0] + q[1] * e[1];
        for b in -4..=4 {
            let c = c0 + 0.25 * h * b as f64;
            let worst = nodes
                .iter()
                .map(|(p, v)| (v - (p[0] * e[0] + p[1] * e[1] - c).max(0.0)).abs())
                .fold(0.0, f64::max);
            best = best.min(worst);
        }
    }
    best / r
}
