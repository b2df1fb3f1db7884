//! Weighted graph-Laplace solves on a masked lattice.
//!
//! Solves `sum_j w_ij (u_i - u_j) = 0` at active nodes with every other node
//! held fixed, by conjugate gradients preconditioned with a geometric V-cycle.
//! Coarse level node `(I, J)` sits on fine node `(2I, 2J)`.

use super::lattice::Lattice;

const PRE_SMOOTH: usize = 2;
const POST_SMOOTH: usize = 2;
const COARSEST_SWEEPS: usize = 60;
const COARSEST_NODES: usize = 6;

#[derive(Debug, Clone)]
struct Level {
    nx: usize,
    ny: usize,
    active: Vec<bool>,
    w_east: Vec<f64>,
    w_north: Vec<f64>,
    diag: Vec<f64>,
}

impl Level {
    fn finalize_diag(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        self.diag = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let id = j * nx + i;
                let mut d = self.w_east[id] + self.w_north[id];
                if i > 0 {
                    d += self.w_east[id - 1];
                }
                if j > 0 {
                    d += self.w_north[id - nx];
                }
                self.diag[id] = d;
            }
        }
    }

    /// `(A x)_i` for active `i`; inactive entries of `x` are treated as zero.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        for j in 0..self.ny {
            for i in 0..nx {
                let id = j * nx + i;
                if !self.active[id] {
                    out[id] = 0.0;
                    continue;
                }
                let mut s = self.diag[id] * x[id];
                s -= self.off_sum(i, j, id, x);
                out[id] = s;
            }
        }
    }

    #[inline]
    fn off_sum(&self, i: usize, j: usize, id: usize, x: &[f64]) -> f64 {
        let nx = self.nx;
        let mut s = 0.0;
        if i + 1 < nx && self.active[id + 1] {
            s += self.w_east[id] * x[id + 1];
        }
        if i > 0 && self.active[id - 1] {
            s += self.w_east[id - 1] * x[id - 1];
        }
        if j + 1 < self.ny && self.active[id + nx] {
            s += self.w_north[id] * x[id + nx];
        }
        if j > 0 && self.active[id - nx] {
            s += self.w_north[id - nx] * x[id - nx];
        }
        s
    }

    fn gauss_seidel(&self, x: &mut [f64], b: &[f64], forward: bool) {
        let nx = self.nx;
        let n = nx * self.ny;
        for step in 0..n {
            let id = if forward { step } else { n - 1 - step };
            if !self.active[id] || self.diag[id] <= 0.0 {
                continue;
            }
            let (i, j) = (id % nx, id / nx);
            x[id] = (b[id] + self.off_sum(i, j, id, x)) / self.diag[id];
        }
    }

    fn coarsen(&self) -> Level {
        let nxc = self.nx.div_ceil(2);
        let nyc = self.ny.div_ceil(2);
        let fnx = self.nx;
        let mut c = Level {
            nx: nxc,
            ny: nyc,
            active: vec![false; nxc * nyc],
            w_east: vec![0.0; nxc * nyc],
            w_north: vec![0.0; nxc * nyc],
            diag: Vec::new(),
        };
        for jc in 0..nyc {
            for ic in 0..nxc {
                let cid = jc * nxc + ic;
                let f = 2 * jc * fnx + 2 * ic;
                c.active[cid] = self.active[f];
                if 2 * ic + 2 < fnx {
                    let (a, b) = (self.w_east[f], self.w_east[f + 1]);
                    if a > 0.0 && b > 0.0 {
                        c.w_east[cid] = 0.5 * (a + b);
                    }
                }
                if 2 * jc + 2 < self.ny {
                    let (a, b) = (self.w_north[f], self.w_north[f + fnx]);
                    if a > 0.0 && b > 0.0 {
                        c.w_north[cid] = 0.5 * (a + b);
                    }
                }
            }
        }
        c.finalize_diag();
        c
    }

    fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }
}

/// Full-weighting restriction to the next coarser level.
fn restrict(fine: &Level, coarse: &Level, r: &[f64], out: &mut [f64]) {
    let fnx = fine.nx as isize;
    let fny = fine.ny as isize;
    for jc in 0..coarse.ny {
        for ic in 0..coarse.nx {
            let cid = jc * coarse.nx + ic;
            if !coarse.active[cid] {
                out[cid] = 0.0;
                continue;
            }
            let (fi, fj) = (2 * ic as isize, 2 * jc as isize);
            let mut s = 0.0;
            for b in -1..=1isize {
                for a in -1..=1isize {
                    let (x, y) = (fi + a, fj + b);
                    if x < 0 || y < 0 || x >= fnx || y >= fny {
                        continue;
                    }
                    let w = 1.0 / ((1 << (a.abs() + b.abs())) as f64);
                    s += w * r[(y * fnx + x) as usize];
                }
            }
            out[cid] = s;
        }
    }
}

/// Bilinear prolongation, added to `x` on active fine nodes.
fn prolong_add(fine: &Level, coarse: &Level, e: &[f64], x: &mut [f64]) {
    let cnx = coarse.nx;
    for j in 0..fine.ny {
        for i in 0..fine.nx {
            let id = j * fine.nx + i;
            if !fine.active[id] {
                continue;
            }
            let (ic, jc) = (i / 2, j / 2);
            let (oi, oj) = (i % 2, j % 2);
            let at = |a: usize, b: usize| -> f64 {
                if a < coarse.nx && b < coarse.ny {
                    let cid = b * cnx + a;
                    if coarse.active[cid] {
                        return e[cid];
                    }
                }
                0.0
            };
            let v = match (oi, oj) {
                (0, 0) => at(ic, jc),
                (1, 0) => 0.5 * (at(ic, jc) + at(ic + 1, jc)),
                (0, 1) => 0.5 * (at(ic, jc) + at(ic, jc + 1)),
                _ => 0.25 * (at(ic, jc) + at(ic + 1, jc) + at(ic, jc + 1) + at(ic + 1, jc + 1)),
            };
            x[id] += v;
        }
    }
}

/// Linear-solve statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Multigrid hierarchy for one active set.
pub struct HarmonicSolver {
    levels: Vec<Level>,
}

impl HarmonicSolver {
    /// Builds the hierarchy for the active mask on `lattice`.
    pub fn new(lattice: &Lattice, active: &[bool]) -> Self {
        let mut top = Level {
            nx: lattice.nx,
            ny: lattice.ny,
            active: active.to_vec(),
            w_east: lattice.w_east.clone(),
            w_north: lattice.w_north.clone(),
            diag: Vec::new(),
        };
        top.finalize_diag();
        let mut levels = vec![top];
        loop {
            let last = levels.last().expect("nonempty");
            if last.nx.min(last.ny) <= COARSEST_NODES || last.active_count() <= 16 {
                break;
            }
            let next = last.coarsen();
            if next.active_count() == 0 {
                break;
            }
            levels.push(next);
        }
        Self { levels }
    }

    fn v_cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        let lv = &self.levels[level];
        x.iter_mut().for_each(|v| *v = 0.0);
        if level + 1 == self.levels.len() {
            for _ in 0..COARSEST_SWEEPS {
                lv.gauss_seidel(x, b, true);
                lv.gauss_seidel(x, b, false);
            }
            return;
        }
        for _ in 0..PRE_SMOOTH {
            lv.gauss_seidel(x, b, true);
        }
        let n = lv.nx * lv.ny;
        let mut r = vec![0.0; n];
        lv.apply(x, &mut r);
        for id in 0..n {
            r[id] = if lv.active[id] { b[id] - r[id] } else { 0.0 };
        }
        let coarse = &self.levels[level + 1];
        let mut rc = vec![0.0; coarse.nx * coarse.ny];
        restrict(lv, coarse, &r, &mut rc);
        let mut ec = vec![0.0; rc.len()];
        self.v_cycle(level + 1, &rc, &mut ec);
        prolong_add(lv, coarse, &ec, x);
        for _ in 0..POST_SMOOTH {
            lv.gauss_seidel(x, b, false);
        }
    }

    /// Solves the masked problem in place: active entries of `u` are
    /// overwritten, the rest act as boundary values.
    pub fn solve(&self, u: &mut [f64], rel_tol: f64, max_iter: usize) -> SolveReport {
        self.solve_with_source(u, None, rel_tol, max_iter)
    }

    /// As [`solve`](Self::solve) with `source_i` added to the right-hand side
    /// of `sum_j w_ij (u_i - u_j) = source_i`.
    pub fn solve_with_source(
        &self,
        u: &mut [f64],
        source: Option<&[f64]>,
        rel_tol: f64,
        max_iter: usize,
    ) -> SolveReport {
        let top = &self.levels[0];
        let n = top.nx * top.ny;
        let nx = top.nx;
        // Right-hand side from fixed neighbors.
        let mut b = vec![0.0; n];
        for j in 0..top.ny {
            for i in 0..nx {
                let id = j * nx + i;
                if !top.active[id] {
                    continue;
                }
                let mut s = 0.0;
                if i + 1 < nx && !top.active[id + 1] {
                    s += top.w_east[id] * u[id + 1];
                }
                if i > 0 && !top.active[id - 1] {
                    s += top.w_east[id - 1] * u[id - 1];
                }
                if j + 1 < top.ny && !top.active[id + nx] {
                    s += top.w_north[id] * u[id + nx];
                }
                if j > 0 && !top.active[id - nx] {
                    s += top.w_north[id - nx] * u[id - nx];
                }
                b[id] = s + source.map_or(0.0, |src| src[id]);
            }
        }
        let mut x: Vec<f64> = (0..n)
            .map(|id| if top.active[id] { u[id] } else { 0.0 })
            .collect();
        let mut r = vec![0.0; n];
        top.apply(&x, &mut r);
        for id in 0..n {
            r[id] = if top.active[id] { b[id] - r[id] } else { 0.0 };
        }
        let b_norm = dot(&b, &b).sqrt().max(f64::MIN_POSITIVE);
        let scale = b_norm.max(dot(&r, &r).sqrt());
        let mut z = vec![0.0; n];
        self.v_cycle(0, &r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let mut report = SolveReport {
            iterations: 0,
            relative_residual: dot(&r, &r).sqrt() / scale,
        };
        while report.iterations < max_iter && report.relative_residual > rel_tol {
            top.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for id in 0..n {
                x[id] += alpha * p[id];
                r[id] -= alpha * ap[id];
            }
            report.iterations += 1;
            report.relative_residual = dot(&r, &r).sqrt() / scale;
            if report.relative_residual <= rel_tol {
                break;
            }
            self.v_cycle(0, &r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for id in 0..n {
                p[id] = z[id] + beta * p[id];
            }
        }
        for id in 0..n {
            if top.active[id] {
                u[id] = x[id];
            }
        }
        report
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lattice::{GridGeometry, NodeKind};

    #[test]
    fn reproduces_discrete_harmonic_linear_function() {
        let lat = Lattice::new(GridGeometry::planar_disk(1.0, 1.0 / 64.0)).unwrap();
        let active: Vec<bool> = lat.kind.iter().map(|k| *k == NodeKind::Interior).collect();
        let mut u: Vec<f64> = (0..lat.len())
            .map(|id| {
                let [x, y] = lat.position_of(id);
                if active[id] {
                    0.0
                } else {
                    2.0 * x - y + 0.5
                }
            })
            .collect();
        let solver = HarmonicSolver::new(&lat, &active);
        let rep = solver.solve(&mut u, 1e-12, 200);
        assert!(rep.iterations < 40, "{rep:?}");
        for id in 0..lat.len() {
            if active[id] {
                let [x, y] = lat.position_of(id);
                assert!((u[id] - (2.0 * x - y + 0.5)).abs() < 1e-9);
            }
        }
    }
}
