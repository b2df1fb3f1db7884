//! Grid fields and the relaxation minimizer.

use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{GeometryMode, GridGeometry, Lattice, NodeKind};
use super::multigrid::HarmonicSolver;
use super::trace::Trace;
use super::GridError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeOptions {
    /// Limit on relaxation sweeps per level.
    pub max_sweeps: usize,
    /// Relative energy decrease per sweep below which a level is settled.
    pub energy_tol: f64,
    /// Relative residual for the harmonic projection solves.
    pub projection_tol: f64,
    /// Start from the solution on a grid of twice the spacing.
    pub nested: bool,
    /// Value of `1 / h` at or below which nesting stops and the harmonic
    /// extension of the trace is used.
    pub coarsest_cells: usize,
    /// Seed of the randomized polish sweep.
    pub seed: u64,
    /// Also relax from the trace evaluated at interior nodes and keep the
    /// lower-energy result.
    pub extension_start: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 400,
            energy_tol: 1e-12,
            projection_tol: 1e-11,
            nested: true,
            coarsest_cells: 32,
            seed: 0x5eed,
            extension_start: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub sweeps: usize,
    pub projection_iterations: usize,
    pub energy_history: Vec<f64>,
    pub converged: bool,
}

/// Nonnegative nodal field on a lattice.
#[derive(Debug, Clone)]
pub struct GridField {
    lattice: Arc<Lattice>,
    values: Vec<f64>,
    energy: f64,
    pub stats: SolveStats,
    signed: OnceLock<Vec<f64>>,
}

impl GridField {
    /// Wraps nodal values; the energy is recomputed.
    pub fn from_values(geometry: GridGeometry, values: Vec<f64>) -> Result<Self, GridError> {
        let lattice = Arc::new(Lattice::new(geometry)?);
        if values.len() != lattice.len() {
            return Err(GridError::SizeMismatch {
                expected: lattice.len(),
                got: values.len(),
            });
        }
        let energy = discrete_energy(&lattice, &values);
        Ok(Self {
            lattice,
            values,
            energy,
            stats: SolveStats::default(),
            signed: OnceLock::new(),
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.lattice.geometry
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Overwrites one node and refreshes the energy.
    pub fn set_value(&mut self, id: usize, v: f64) {
        self.values[id] = v;
        self.signed = OnceLock::new();
        self.energy = discrete_energy(&self.lattice, &self.values);
    }

    pub fn h(&self) -> f64 {
        self.lattice.geometry.h
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Dirichlet nodes with their fixed values.
    pub fn boundary_trace(&self) -> Vec<([f64; 2], f64)> {
        (0..self.lattice.len())
            .filter(|&id| self.lattice.kind[id] == NodeKind::Dirichlet)
            .map(|id| (self.lattice.position_of(id), self.values[id]))
            .collect()
    }

    /// Largest `|Delta_h u| * h` over positive interior nodes.
    pub fn harmonic_residual(&self) -> f64 {
        let lat = &*self.lattice;
        let h = lat.geometry.h;
        let mut worst = 0.0f64;
        for id in 0..lat.len() {
            if lat.kind[id] != NodeKind::Interior || self.values[id] <= 0.0 {
                continue;
            }
            let (w, s) = neighbor_sums(lat, &self.values, id);
            worst = worst.max(4.0 * (s / w - self.values[id]).abs() / h);
        }
        worst
    }

    /// Values with zero nodes next to the positive set replaced by the mean
    /// of the linear extrapolations `2 u_j - u_k` along lattice lines from
    /// positive pairs `(j, k)`. Exact for half-plane solutions.
    pub fn signed_values(&self) -> &[f64] {
        self.signed
            .get_or_init(|| signed_extension(&self.lattice, &self.values))
    }

    fn cell(&self, p: [f64; 2]) -> Cell {
        self.cell_of(&self.values, p)
    }

    fn cell_of(&self, u: &[f64], p: [f64; 2]) -> Cell {
        let lat = &*self.lattice;
        let f = lat.locate(p);
        let axis = |v: f64, n: usize| -> (usize, f64, bool) {
            let top = (n - 1) as f64;
            let (v, clamped) = if v < 0.0 {
                (0.0, true)
            } else if v > top {
                (top, true)
            } else {
                (v, false)
            };
            let i0 = (v.floor() as usize).min(n - 2);
            (i0, v - i0 as f64, clamped)
        };
        let (i0, tx, cx) = axis(f[0], lat.nx);
        let (j0, ty, cy) = axis(f[1], lat.ny);
        let id = j0 * lat.nx + i0;
        Cell {
            corners: [u[id], u[id + 1], u[id + lat.nx], u[id + lat.nx + 1]],
            tx,
            ty,
            clamped: [cx, cy],
        }
    }

    /// Bilinear interpolant at `p`.
    pub fn sample(&self, p: [f64; 2]) -> f64 {
        self.cell(p).value()
    }

    /// Gradient of the bilinear interpolant at `p`.
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        self.cell_gradient(&self.cell(p), p)
    }

    /// Value and gradient of the interpolated signed extension at `p`.
    pub fn sample_signed(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let c = self.cell_of(self.signed_values(), p);
        (c.value(), self.cell_gradient(&c, p))
    }

    fn cell_gradient(&self, c: &Cell, p: [f64; 2]) -> [f64; 2] {
        let h = self.h();
        let [a, b, cc, d] = c.corners;
        let mut gx = ((1.0 - c.ty) * (b - a) + c.ty * (d - cc)) / h;
        let mut gy = ((1.0 - c.tx) * (cc - a) + c.tx * (d - b)) / h;
        if c.clamped[0] {
            gx = 0.0;
        }
        if c.clamped[1] {
            gy = 0.0;
        }
        if let GeometryMode::DoublePolar(_) = self.lattice.geometry.mode {
            if p[0] < 0.0 {
                gx = -gx;
            }
            if p[1] < 0.0 {
                gy = -gy;
            }
        }
        [gx, gy]
    }
}

struct Cell {
    corners: [f64; 4],
    tx: f64,
    ty: f64,
    clamped: [bool; 2],
}

impl Cell {
    fn value(&self) -> f64 {
        let [a, b, c, d] = self.corners;
        (1.0 - self.ty) * ((1.0 - self.tx) * a + self.tx * b)
            + self.ty * ((1.0 - self.tx) * c + self.tx * d)
    }
}

fn signed_extension(lat: &Lattice, u: &[f64]) -> Vec<f64> {
    let (nx, ny) = (lat.nx as isize, lat.ny as isize);
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
    let mut out = u.to_vec();
    for id in 0..lat.len() {
        if u[id] > 0.0 || lat.kind[id] == NodeKind::Outside {
            continue;
        }
        let (i, j) = ((id % lat.nx) as isize, (id / lat.nx) as isize);
        let mut sum = 0.0;
        let mut count = 0;
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let (Some(a), Some(b)) = (at(i + di, j + dj), at(i + 2 * di, j + 2 * dj)) {
                if a > 0.0 && b > 0.0 {
                    sum += 2.0 * a - b;
                    count += 1;
                }
            }
        }
        if count > 0 {
            out[id] = sum / count as f64;
        }
    }
    out
}

#[inline]
fn neighbor_sums(lat: &Lattice, u: &[f64], id: usize) -> (f64, f64) {
    let (i, j) = (id % lat.nx, id / lat.nx);
    let mut w = 0.0;
    let mut s = 0.0;
    for (n, we) in lat.neighbors(i, j) {
        w += we;
        s += we * u[n];
    }
    (w, s)
}

/// Volume term of one stage: the sharp indicator, or the ramp
/// `min(u / eps, 1)` used while the positive set is still being located.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Volume {
    Sharp,
    Ramp(f64),
}

impl Volume {
    #[inline]
    fn cost(self, u: f64) -> f64 {
        match self {
            Self::Sharp => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Ramp(eps) => (u / eps).clamp(0.0, 1.0),
        }
    }
}

/// `sum_edges w_e (u_i - u_j)^2 + sum_interior w_i h^2 [u_i > 0]`.
pub(crate) fn discrete_energy(lat: &Lattice, u: &[f64]) -> f64 {
    stage_energy(lat, u, Volume::Sharp)
}

fn stage_energy(lat: &Lattice, u: &[f64], volume: Volume) -> f64 {
    let h2 = lat.geometry.h * lat.geometry.h;
    let nx = lat.nx;
    let mut dirichlet = 0.0;
    let mut bulk = 0.0;
    for id in 0..lat.len() {
        let inner = lat.kind[id] == NodeKind::Interior;
        if inner {
            bulk += lat.w_node[id] * h2 * volume.cost(u[id]);
        }
        let i = id % nx;
        if i + 1 < nx && (inner || lat.kind[id + 1] == NodeKind::Interior) {
            let du = u[id] - u[id + 1];
            dirichlet += lat.w_east[id] * du * du;
        }
        if id + nx < lat.len() && (inner || lat.kind[id + nx] == NodeKind::Interior) {
            let du = u[id] - u[id + nx];
            dirichlet += lat.w_north[id] * du * du;
        }
    }
    dirichlet + bulk
}

/// Exact minimization over one node; returns whether its sign changed.
///
/// Sharp stage: `u_i = mu` if `W mu^2 > w_i h^2`, else 0 (ties to 0).
#[inline]
fn relax_node(lat: &Lattice, u: &mut [f64], id: usize, h2: f64, volume: Volume) -> bool {
    let (w, s) = neighbor_sums(lat, u, id);
    let mu = s / w;
    let mass = lat.w_node[id] * h2;
    let new = match volume {
        Volume::Sharp => {
            if w * mu * mu > mass {
                mu
            } else {
                0.0
            }
        }
        Volume::Ramp(eps) => {
            let slope = mass / eps;
            let low = (mu - 0.5 * slope / w).clamp(0.0, eps);
            let high = mu.max(eps);
            let cost_low = w * (low - mu) * (low - mu) + slope * low;
            let cost_high = w * (high - mu) * (high - mu) + mass;
            if cost_high < cost_low {
                high
            } else {
                low
            }
        }
    };
    let changed = (new > 0.0) != (u[id] > 0.0);
    u[id] = new;
    changed
}

fn relax_pass(lat: &Lattice, u: &mut [f64], order: &[usize], volume: Volume) -> usize {
    let h2 = lat.geometry.h * lat.geometry.h;
    order
        .iter()
        .filter(|&&id| relax_node(lat, u, id, h2, volume))
        .count()
}

/// Exact solve of the stationarity equations for the current partition of
/// the nodes into zero, ramp and saturated sets. Kept only if the stage
/// energy does not increase. Returns CG iterations.
fn project(lat: &Lattice, u: &mut [f64], tol: f64, volume: Volume) -> usize {
    let active: Vec<bool> = (0..lat.len())
        .map(|id| lat.kind[id] == NodeKind::Interior && u[id] > 0.0)
        .collect();
    if !active.iter().any(|a| *a) {
        return 0;
    }
    let source: Option<Vec<f64>> = match volume {
        Volume::Sharp => None,
        Volume::Ramp(eps) => {
            let h2 = lat.geometry.h * lat.geometry.h;
            Some(
                (0..lat.len())
                    .map(|id| {
                        if active[id] && u[id] < eps {
                            -0.5 * lat.w_node[id] * h2 / eps
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
        }
    };
    let before = stage_energy(lat, u, volume);
    let saved = u.to_vec();
    let solver = HarmonicSolver::new(lat, &active);
    let report = solver.solve_with_source(u, source.as_deref(), tol, 500);
    for (v, a) in u.iter_mut().zip(&active) {
        if *a && *v < 0.0 {
            *v = 0.0;
        }
    }
    if stage_energy(lat, u, volume) > before {
        u.copy_from_slice(&saved);
    }
    report.iterations
}

/// Sweep limit and relative energy tolerance of the ramp stages, which only
/// locate the positive set for the sharp stage.
const RAMP_SWEEPS: usize = 40;
const RAMP_ENERGY_TOL: f64 = 1e-7;

struct Stage<'a> {
    lat: &'a Lattice,
    interior: &'a [usize],
    reverse: &'a [usize],
    opts: &'a MinimizeOptions,
}

struct StageOutcome {
    energy: f64,
    last_decrease: f64,
    converged: bool,
}

impl Stage<'_> {
    /// Ordered sweeps, each followed by a projection, until a sweep changes
    /// no sign and the energy decrease is below tolerance; then a
    /// randomized-order polish sweep must also change nothing.
    fn run(
        &self,
        u: &mut [f64],
        volume: Volume,
        stats: &mut SolveStats,
        rng: &mut ChaCha8Rng,
    ) -> Result<StageOutcome, GridError> {
        let lat = self.lat;
        let tol = self.opts.projection_tol;
        let sharp = volume == Volume::Sharp;
        let mut energy = stage_energy(lat, u, volume);
        if sharp {
            stats.energy_history.push(energy);
        }
        let mut shuffled = self.interior.to_vec();
        let mut last_decrease = f64::INFINITY;
        let mut sweeps = 0;
        let (limit, energy_tol) = if sharp {
            (self.opts.max_sweeps, self.opts.energy_tol)
        } else {
            (RAMP_SWEEPS, RAMP_ENERGY_TOL)
        };
        while sweeps < limit {
            let order = if sweeps % 2 == 0 {
                self.interior
            } else {
                self.reverse
            };
            let mut switched = relax_pass(lat, u, order, volume);
            stats.projection_iterations += project(lat, u, tol, volume);
            sweeps += 1;
            stats.sweeps += 1;
            let mut next = stage_energy(lat, u, volume);
            check_descent(stats.sweeps, energy, next)?;
            last_decrease = energy - next;
            if sharp {
                stats.energy_history.push(next);
            }
            energy = next;
            let settled = last_decrease <= energy_tol * energy.max(1.0);
            if !sharp && settled {
                return Ok(StageOutcome {
                    energy,
                    last_decrease,
                    converged: true,
                });
            }
            if switched == 0 && settled {
                shuffled.shuffle(rng);
                switched = relax_pass(lat, u, &shuffled, volume);
                if switched > 0 {
                    stats.projection_iterations += project(lat, u, tol, volume);
                }
                next = stage_energy(lat, u, volume);
                check_descent(stats.sweeps, energy, next)?;
                energy = next;
                if switched == 0 {
                    return Ok(StageOutcome {
                        energy,
                        last_decrease,
                        converged: true,
                    });
                }
            }
        }
        Ok(StageOutcome {
            energy,
            last_decrease,
            converged: false,
        })
    }
}

/// Relaxes the sharp energy starting from `initial`, whose Dirichlet values
/// are replaced by `trace`.
pub fn relax_from(
    initial: &GridField,
    trace: &Trace,
    opts: &MinimizeOptions,
) -> Result<GridField, GridError> {
    let lattice = initial.lattice.clone();
    let lat = &*lattice;
    let mut u = initial.values.clone();
    for id in 0..lat.len() {
        if lat.kind[id] != NodeKind::Interior {
            u[id] = trace.value(lat.position_of(id));
        } else {
            u[id] = u[id].max(0.0);
        }
    }
    let interior: Vec<usize> = (0..lat.len())
        .filter(|&id| lat.kind[id] == NodeKind::Interior)
        .collect();
    let reverse: Vec<usize> = interior.iter().rev().copied().collect();
    let mut stats = SolveStats::default();
    let stage = Stage {
        lat,
        interior: &interior,
        reverse: &reverse,
        opts,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let outcome = stage.run(&mut u, Volume::Sharp, &mut stats, &mut rng)?;
    stats.converged = outcome.converged;
    finish(lattice, u, outcome, stats)
}

fn finish(
    lattice: Arc<Lattice>,
    values: Vec<f64>,
    outcome: StageOutcome,
    stats: SolveStats,
) -> Result<GridField, GridError> {
    let field = GridField {
        lattice,
        values,
        energy: outcome.energy,
        stats,
        signed: OnceLock::new(),
    };
    if outcome.converged {
        Ok(field)
    } else {
        Err(GridError::SweepLimitExceeded {
            sweeps: field.stats.sweeps,
            last_decrease: outcome.last_decrease,
            field: Box::new(field),
        })
    }
}

/// Minimizes the discrete energy with Dirichlet data `trace`.
///
/// The positive set is first located with the ramp volume term
/// `min(u / eps, 1)` for `eps` halving down to `2h`, starting from the
/// harmonic extension of the trace (or from the solution on the grid of
/// spacing `2h`, with the single ramp `eps = 2h`). The last ramp profile is
/// mapped to its sharp counterpart and the sharp energy is then relaxed to
/// convergence. In every stage, ordered sweeps alternate
/// lexicographic and reverse order and are each followed by an exact solve
/// on the current positive set.
///
/// With `extension_start`, the sharp energy is also relaxed from the trace
/// evaluated at the interior nodes, and the lower-energy field is returned.
pub fn minimize(
    geometry: GridGeometry,
    trace: &Trace,
    opts: &MinimizeOptions,
) -> Result<GridField, GridError> {
    let continued = continuation(geometry, trace, opts);
    if !opts.extension_start {
        return continued;
    }
    let lattice = Lattice::new(geometry)?;
    let values = (0..lattice.len())
        .map(|id| trace.value(lattice.position_of(id)))
        .collect();
    let extended = relax_from(&GridField::from_values(geometry, values)?, trace, opts);
    match (continued, extended) {
        (Ok(a), Ok(b)) => Ok(if b.energy() < a.energy() { b } else { a }),
        (Ok(a), Err(_)) => Ok(a),
        (Err(_), Ok(b)) => Ok(b),
        (Err(e), Err(_)) => Err(e),
    }
}

fn continuation(
    geometry: GridGeometry,
    trace: &Trace,
    opts: &MinimizeOptions,
) -> Result<GridField, GridError> {
    let lattice = Arc::new(Lattice::new(geometry)?);
    let lat = &*lattice;
    let h = geometry.h;
    let mut u = vec![0.0; lat.len()];
    for id in 0..lat.len() {
        if lat.kind[id] != NodeKind::Interior {
            u[id] = trace.value(lat.position_of(id));
        }
    }
    let interior: Vec<usize> = (0..lat.len())
        .filter(|&id| lat.kind[id] == NodeKind::Interior)
        .collect();
    let reverse: Vec<usize> = interior.iter().rev().copied().collect();
    let mut stats = SolveStats::default();

    let coarse_geometry = geometry.rescaled_spacing(2.0);
    let refine =
        opts.nested && 1.0 / h > opts.coarsest_cells as f64 && coarse_geometry.validate().is_ok();
    let mut ramps = Vec::new();
    if refine {
        let coarse = match continuation(coarse_geometry, trace, opts) {
            Ok(f) => f,
            Err(GridError::SweepLimitExceeded { field, .. }) => *field,
            Err(e) => return Err(e),
        };
        for &id in &interior {
            u[id] = coarse.sample(lat.position_of(id)).max(0.0);
        }
        stats.projection_iterations += coarse.stats.projection_iterations;
        ramps.push(2.0 * h);
    } else {
        let active: Vec<bool> = lat.kind.iter().map(|k| *k == NodeKind::Interior).collect();
        let solver = HarmonicSolver::new(lat, &active);
        stats.projection_iterations += solver.solve(&mut u, opts.projection_tol, 500).iterations;
        for &id in &interior {
            u[id] = u[id].max(0.0);
        }
        let mut eps = 0.5 * geometry.radius;
        while eps > 2.0 * h {
            ramps.push(eps);
            eps *= 0.5;
        }
        ramps.push(2.0 * h);
    }

    let stage = Stage {
        lat,
        interior: &interior,
        reverse: &reverse,
        opts,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let last = ramps.last().copied();
    for eps in ramps {
        stage.run(&mut u, Volume::Ramp(eps), &mut stats, &mut rng)?;
    }
    if let Some(eps) = last {
        for &id in &interior {
            u[id] = sharpen(u[id], eps);
        }
    }
    let outcome = stage.run(&mut u, Volume::Sharp, &mut stats, &mut rng)?;
    stats.converged = outcome.converged;
    finish(lattice, u, outcome, stats)
}

/// Maps the one-dimensional ramp profile `(x - x0)^2 / (4 eps)` to the sharp
/// profile `(x - x0 - eps)_+`; identity for `u >= eps`.
fn sharpen(u: f64, eps: f64) -> f64 {
    if u >= eps {
        u
    } else {
        (2.0 * (eps * u).sqrt() - eps).max(0.0)
    }
}

fn check_descent(sweep: usize, before: f64, after: f64) -> Result<(), GridError> {
    let slack = 1e-11 * before.abs().max(1.0);
    if after > before + slack {
        return Err(GridError::EnergyIncreased {
            sweep,
            before,
            after,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trace_gives_zero_field() {
        let geom = GridGeometry::planar_disk(1.0, 1.0 / 32.0);
        let f = minimize(geom, &Trace::Zero, &MinimizeOptions::default()).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
        assert_eq!(f.energy(), 0.0);
    }

    #[test]
    fn energy_history_is_monotone() {
        let geom = GridGeometry::planar_disk(1.0, 1.0 / 64.0);
        let t = Trace::flat([1.0, 0.0], 0.3);
        let f = minimize(geom, &t, &MinimizeOptions::default()).unwrap();
        for w in f.stats.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-11 * w[0].max(1.0));
        }
        assert!(f.harmonic_residual() < 1e-6);
    }

    #[test]
    fn values_size_is_checked() {
        let geom = GridGeometry::planar_disk(1.0, 1.0 / 16.0);
        assert!(matches!(
            GridField::from_values(geom, vec![0.0; 3]),
            Err(GridError::SizeMismatch { .. })
        ));
    }
}
