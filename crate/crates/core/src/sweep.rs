//! Families of lifted boundary data: ordering audits, separation rates and
//! difference-field diagnostics.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    classify_point, free_boundary, minimize, relax_from, weiss_series, FreeBoundaryCurve,
    GeometryMode, GridError, GridField, GridGeometry, MinimizeOptions, NodeKind, PointClass,
    RegularityScaleField, Trace,
};

/// Multiple of `h` allowed in the nodewise ordering audit `u_s <= u_t + C h`.
pub const ORDERING_SLACK_CELLS: f64 = 1.0;

/// Pairs with `|t - s|` below this many grid spacings are audited for
/// nodewise ordering only and left out of the fits: discrete free boundaries
/// sit on lattice nodes, so smaller separations are not resolved.
pub const RESOLVED_SEPARATION_CELLS: f64 = 4.0;

/// Dyadic factor of the decay diagnostic.
pub const DECAY_FACTOR: f64 = 2.0;

/// Minimum number of pairs for an exponent fit.
pub const MIN_FIT_PAIRS: usize = 4;

/// Limit on passes of [`repair_ordering`].
pub const REPAIR_PASSES: usize = 4;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("ordering violated between t = {s} and t = {t} at {at:?}: {kind}")]
    OrderingViolation {
        s: f64,
        t: f64,
        at: [f64; 2],
        kind: ViolationKind,
    },
    #[error("Weiss series not monotone at t = {t}: drop {drop:e} > {tolerance:e}")]
    WeissViolation { t: f64, drop: f64, tolerance: f64 },
    #[error("need at least {needed} pairs for a fit, have {got}")]
    InsufficientPairs { needed: usize, got: usize },
    #[error("no singular point flagged at t = 0")]
    NoSingularPoint,
    #[error("no node on the annulus of radius {radius} has the required regularity scale")]
    EmptyAnnulus { radius: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `u_s - u_t` exceeds the slack by `excess`.
    Nodewise { excess: f64 },
    /// Free boundaries closer than `h`.
    Touching { gap: f64 },
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Nodewise { excess } => write!(f, "u_s exceeds u_t by {excess:e} beyond slack"),
            Self::Touching { gap } => write!(f, "free boundaries {gap:e} apart"),
        }
    }
}

/// Lifted family `g_t = (g + t)_+`.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub base: Trace,
    /// Increasing values in `(-1, 1)`.
    pub t_grid: Vec<f64>,
    pub geometry: GridGeometry,
    pub options: MinimizeOptions,
    /// Annulus `[inner, outer]` around the origin in which free boundary
    /// separations are measured, away from singular points and the rim.
    pub probe_window: [f64; 2],
    /// Points tested for singularity.
    pub singular_probes: Vec<[f64; 2]>,
    /// Relative density gap used by the classifier.
    pub relative_gap: f64,
    /// Radii of the Weiss audit at the origin; empty to skip it.
    pub weiss_radii: Vec<f64>,
}

impl FamilySpec {
    /// Smallest admissible nonzero `|t|`: `10 h^2`.
    pub fn t_floor(&self) -> f64 {
        10.0 * self.geometry.h * self.geometry.h
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.geometry.validate()?;
        let bad = |m: String| Err(SweepError::InvalidFamily(m));
        if self.t_grid.len() < 2 {
            return bad(format!(
                "need at least two t values, got {}",
                self.t_grid.len()
            ));
        }
        for (j, &t) in self.t_grid.iter().enumerate() {
            if !t.is_finite() || t <= -1.0 || t >= 1.0 {
                return bad(format!("t = {t} outside (-1, 1)"));
            }
            if t != 0.0 && t.abs() < self.t_floor() {
                return bad(format!("t = {t} below the floor {:e}", self.t_floor()));
            }
            if j > 0 && t <= self.t_grid[j - 1] {
                return bad(format!("t grid not increasing at {t}"));
            }
        }
        let [a, b] = self.probe_window;
        if !(a >= 0.0 && b > a) {
            return bad(format!("probe window [{a}, {b}] is empty"));
        }
        self.check_assumption()
    }

    /// `g_t - g_s >= t - s` on Dirichlet nodes where `g_s > 0`.
    pub fn check_assumption(&self) -> Result<(), SweepError> {
        let lat = crate::grid::Lattice::new(self.geometry)?;
        let boundary: Vec<[f64; 2]> = (0..lat.len())
            .filter(|&id| lat.kind[id] == NodeKind::Dirichlet)
            .map(|id| lat.position_of(id))
            .collect();
        for w in self.t_grid.windows(2) {
            let (s, t) = (w[0], w[1]);
            let (gs, gt) = (self.base.lifted(s), self.base.lifted(t));
            for &p in &boundary {
                let (a, b) = (gs.value(p), gt.value(p));
                if a > 0.0 && b - a < (t - s) * (1.0 - 1e-12) {
                    return Err(SweepError::InvalidFamily(format!(
                        "lift rule broken at {p:?} between t = {s} and t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `n` log-spaced values in `[lo, hi]`, raised to `floor` and deduplicated.
pub fn log_grid(lo: f64, hi: f64, n: usize, floor: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..n)
        .map(|j| {
            let f = if n > 1 {
                j as f64 / (n - 1) as f64
            } else {
                0.0
            };
            (lo.ln() + f * (hi.ln() - lo.ln())).exp().max(floor)
        })
        .collect();
    out.dedup();
    out
}

/// Per-`t` outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TSummary {
    pub t: f64,
    pub energy: Option<f64>,
    pub converged: bool,
    pub free_boundary: Option<FreeBoundaryCurve>,
    /// Probes classified singular.
    pub singular: Vec<[f64; 2]>,
    /// Worst drop of the Weiss audit at the origin.
    pub weiss_drop: Option<f64>,
    /// Solver or analysis failure, if any.
    pub error: Option<String>,
}

/// One row of the pair table, `s < t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub s: f64,
    pub t: f64,
    /// `dist(Gamma_s, Gamma_t)` inside the probe window.
    pub fb_distance: Option<f64>,
    /// `dist(Sing_s, Gamma_t)`.
    pub singular_distance: Option<f64>,
    /// Whether `|t - s|` is resolved by the grid.
    pub resolved: bool,
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    /// Normal-approximation 95% interval for the slope.
    pub slope_interval: [f64; 2],
    pub pairs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub geometry: GridGeometry,
    pub summaries: Vec<TSummary>,
    pub pairs: Vec<PairRecord>,
    pub linear_fit: Option<ExponentFit>,
    pub superlinear_fit: Option<ExponentFit>,
    /// `min dist(Gamma_s, Gamma_t) / |t - s|` over resolved pairs.
    pub linear_constant: Option<f64>,
    /// Converged fields, parallel to `summaries`.
    #[serde(skip)]
    pub fields: Vec<Option<Arc<GridField>>>,
}

impl SweepReport {
    pub fn field(&self, t: f64) -> Option<&GridField> {
        self.summaries
            .iter()
            .position(|s| s.t == t)
            .and_then(|j| self.fields[j].as_deref())
    }

    /// `(tau, s(tau))` for `tau > 0`, measured from the first singular point
    /// flagged at `t = 0`.
    pub fn cleaning_distances(&self) -> Result<Vec<[f64; 2]>, SweepError> {
        let zero = self
            .summaries
            .iter()
            .find(|s| s.t == 0.0)
            .ok_or(SweepError::NoSingularPoint)?;
        let p = *zero.singular.first().ok_or(SweepError::NoSingularPoint)?;
        Ok(self
            .summaries
            .iter()
            .filter(|s| s.t > 0.0)
            .filter_map(|s| Some([s.t, s.free_boundary.as_ref()?.distance_to(p)]))
            .filter(|[_, d]| d.is_finite() && *d > 0.0)
            .collect())
    }
}

fn in_window(p: [f64; 2], window: [f64; 2]) -> bool {
    let r = p[0].hypot(p[1]);
    r >= window[0] && r <= window[1]
}

fn summarize(spec: &FamilySpec, t: f64, field: &GridField) -> TSummary {
    let mut summary = TSummary {
        t,
        energy: Some(field.energy()),
        converged: false,
        free_boundary: None,
        singular: Vec::new(),
        weiss_drop: None,
        error: None,
    };
    summary.converged = field.stats.converged;
    match free_boundary(field) {
        Ok(c) => summary.free_boundary = Some(c),
        Err(GridError::EmptyBoundary) => {}
        Err(e) => summary.error = Some(e.to_string()),
    }
    for &p in &spec.singular_probes {
        match classify_point(field, p, spec.relative_gap) {
            Ok(c) if c.class == PointClass::Singular => summary.singular.push(p),
            Ok(_) => {}
            Err(e) => summary.error = Some(e.to_string()),
        }
    }
    if !spec.weiss_radii.is_empty() {
        match weiss_series(field, [0.0, 0.0], &spec.weiss_radii) {
            Ok(w) => summary.weiss_drop = Some(w.worst_drop()),
            Err(e) => summary.error = Some(e.to_string()),
        }
    }
    summary
}

/// Improves neighboring members by lattice moves.
///
/// The energy is submodular, so for `s < t` the fields `max(u_s, u_t)` with
/// data `g_t` and `min(u_s, u_t)` with data `g_s` have total energy at most
/// that of the pair. Each is relaxed and replaces its member when strictly
/// lower; passes repeat until nothing changes. Returns the replacements.
pub fn repair_ordering(
    spec: &FamilySpec,
    fields: &mut [Option<Arc<GridField>>],
) -> Result<usize, SweepError> {
    let mut replaced = 0;
    for _ in 0..REPAIR_PASSES {
        let mut changed = false;
        for a in 0..fields.len().saturating_sub(1) {
            let b = a + 1;
            let (Some(us), Some(ut)) = (fields[a].clone(), fields[b].clone()) else {
                continue;
            };
            let (s, t) = (spec.t_grid[a], spec.t_grid[b]);
            let combine = |pick: fn(f64, f64) -> f64| -> Vec<f64> {
                us.values()
                    .iter()
                    .zip(ut.values())
                    .map(|(x, y)| pick(*x, *y))
                    .collect()
            };
            let hi = GridField::from_values(spec.geometry, combine(f64::max))?;
            let up = relax_from(&hi, &spec.base.lifted(t), &spec.options);
            if let Ok(up) = up {
                if up.energy() < ut.energy() {
                    fields[b] = Some(Arc::new(up));
                    replaced += 1;
                    changed = true;
                }
            }
            let lo = GridField::from_values(spec.geometry, combine(f64::min))?;
            let down = relax_from(&lo, &spec.base.lifted(s), &spec.options);
            if let Ok(down) = down {
                if down.energy() < us.energy() {
                    fields[a] = Some(Arc::new(down));
                    replaced += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(replaced)
}

/// Solves every member of the family, improves neighbors with
/// [`repair_ordering`], audits ordering and fits exponents.
///
/// Solver failures are recorded on their `t` entry. Ordering violations and
/// Weiss audits outside tolerance are returned as errors after all solves.
pub fn run_family(spec: &FamilySpec) -> Result<SweepReport, SweepError> {
    spec.validate()?;
    let solved: Vec<Result<GridField, GridError>> = spec
        .t_grid
        .par_iter()
        .map(|&t| minimize(spec.geometry, &spec.base.lifted(t), &spec.options))
        .collect();
    let mut failures: Vec<Option<String>> = Vec::with_capacity(solved.len());
    let mut fields: Vec<Option<Arc<GridField>>> = Vec::with_capacity(solved.len());
    for r in solved {
        match r {
            Ok(f) => {
                failures.push(None);
                fields.push(Some(Arc::new(f)));
            }
            Err(e) => {
                failures.push(Some(e.to_string()));
                fields.push(None);
            }
        }
    }
    repair_ordering(spec, &mut fields)?;
    let summaries: Vec<TSummary> = spec
        .t_grid
        .par_iter()
        .zip(fields.par_iter().zip(failures.par_iter()))
        .map(|(&t, (f, err))| match f {
            Some(f) => summarize(spec, t, f),
            None => TSummary {
                t,
                energy: None,
                converged: false,
                free_boundary: None,
                singular: Vec::new(),
                weiss_drop: None,
                error: err.clone(),
            },
        })
        .collect();

    let h = spec.geometry.h;
    for s in &summaries {
        if let Some(drop) = s.weiss_drop {
            if drop > 10.0 * h {
                return Err(SweepError::WeissViolation {
                    t: s.t,
                    drop,
                    tolerance: 10.0 * h,
                });
            }
        }
    }
    let members: Vec<(f64, &GridField)> = summaries
        .iter()
        .zip(&fields)
        .filter_map(|(s, f)| Some((s.t, f.as_deref()?)))
        .collect();
    if members.len() >= 2 {
        check_ordering(&members, spec.probe_window)?;
    }

    let mut pairs = Vec::new();
    for a in 0..summaries.len() {
        for b in a + 1..summaries.len() {
            let (sa, sb) = (&summaries[a], &summaries[b]);
            let window = spec.probe_window;
            let fb_distance = match (&sa.free_boundary, &sb.free_boundary) {
                (Some(x), Some(y)) => {
                    let x = x.restricted(|p| in_window(p, window));
                    let y = y.restricted(|p| in_window(p, window));
                    (x.vertex_count() > 0 && y.vertex_count() > 0).then(|| x.gap(&y))
                }
                _ => None,
            };
            let singular_distance = sb.free_boundary.as_ref().and_then(|c| {
                sa.singular
                    .iter()
                    .map(|p| c.distance_to(*p))
                    .min_by(f64::total_cmp)
            });
            pairs.push(PairRecord {
                s: sa.t,
                t: sb.t,
                fb_distance,
                singular_distance,
                resolved: sb.t - sa.t >= RESOLVED_SEPARATION_CELLS * h,
            });
        }
    }
    let mut report = SweepReport {
        geometry: spec.geometry,
        summaries,
        pairs,
        linear_fit: None,
        superlinear_fit: None,
        linear_constant: None,
        fields,
    };
    report.linear_constant = report
        .pairs
        .iter()
        .filter(|p| p.resolved)
        .filter_map(|p| Some(p.fb_distance? / (p.t - p.s)))
        .min_by(f64::total_cmp);
    let (linear, superlinear) = fit_separation_exponents(&report);
    report.linear_fit = linear.ok();
    report.superlinear_fit = superlinear.ok();
    Ok(report)
}

/// Nodewise ordering `u_s <= u_t + C h` for `s < t` and, for resolved
/// pairs, free boundaries at least `h` apart inside `window`.
pub fn check_ordering(members: &[(f64, &GridField)], window: [f64; 2]) -> Result<(), SweepError> {
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            let (s, us) = members[a];
            let (t, ut) = members[b];
            if s >= t {
                return Err(SweepError::InvalidFamily(format!(
                    "members not ordered by t: {s} before {t}"
                )));
            }
            if us.values().len() != ut.values().len() {
                return Err(GridError::SizeMismatch {
                    expected: us.values().len(),
                    got: ut.values().len(),
                }
                .into());
            }
            let h = us.h();
            let lat = us.lattice();
            let slack = ORDERING_SLACK_CELLS * h;
            let worst = (0..lat.len())
                .filter(|&id| lat.kind[id] == NodeKind::Interior)
                .map(|id| (id, us.values()[id] - ut.values()[id]))
                .max_by(|x, y| x.1.total_cmp(&y.1));
            if let Some((id, diff)) = worst {
                if diff > slack {
                    return Err(SweepError::OrderingViolation {
                        s,
                        t,
                        at: lat.position_of(id),
                        kind: ViolationKind::Nodewise {
                            excess: diff - slack,
                        },
                    });
                }
            }
            if t - s < RESOLVED_SEPARATION_CELLS * h {
                continue;
            }
            let (Ok(cs), Ok(ct)) = (free_boundary(us), free_boundary(ut)) else {
                continue;
            };
            let cs = cs.restricted(|p| in_window(p, window));
            let ct = ct.restricted(|p| in_window(p, window));
            if cs.vertex_count() == 0 || ct.vertex_count() == 0 {
                continue;
            }
            let gap = cs.gap(&ct);
            if gap <= h {
                let at = cs
                    .vertices()
                    .min_by(|x, y| ct.distance_to(*x).total_cmp(&ct.distance_to(*y)))
                    .unwrap_or([0.0, 0.0]);
                return Err(SweepError::OrderingViolation {
                    s,
                    t,
                    at,
                    kind: ViolationKind::Touching { gap },
                });
            }
        }
    }
    Ok(())
}

/// Least-squares fit of `log y` against `log x`.
pub fn fit_loglog(points: &[[f64; 2]]) -> Result<ExponentFit, SweepError> {
    let usable: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|[x, y]| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    if usable.len() < MIN_FIT_PAIRS {
        return Err(SweepError::InsufficientPairs {
            needed: MIN_FIT_PAIRS,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let lx: Vec<f64> = usable.iter().map(|p| p[0].ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|p| p[1].ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(SweepError::InsufficientPairs {
            needed: MIN_FIT_PAIRS,
            got: 1,
        });
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        residual: (sse / n).sqrt(),
        slope_interval: [slope - 1.96 * se, slope + 1.96 * se],
        pairs: usable,
    })
}

/// Linear fit of `dist(Gamma_s, Gamma_t)` against `|t - s|` over resolved
/// pairs, and superlinear fit of `s(tau)` against `tau`.
pub fn fit_separation_exponents(
    report: &SweepReport,
) -> (
    Result<ExponentFit, SweepError>,
    Result<ExponentFit, SweepError>,
) {
    let linear: Vec<[f64; 2]> = report
        .pairs
        .iter()
        .filter(|p| p.resolved)
        .filter_map(|p| Some([p.t - p.s, p.fb_distance?]))
        .collect();
    let superlinear = report.cleaning_distances().and_then(|pts| fit_loglog(&pts));
    (fit_loglog(&linear), superlinear)
}

/// Difference field on one annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRecord {
    pub radius: f64,
    pub nodes: usize,
    pub sup: f64,
    pub inf: f64,
    /// `sup / inf` of `v - u`.
    pub harnack_ratio: f64,
    /// `sup_{dB_{2r}} (v - u) / sup_{dB_r} (v - u)` when `2r` fits.
    pub decay_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceDiagnostics {
    pub rho: f64,
    pub annuli: Vec<AnnulusRecord>,
}

impl DifferenceDiagnostics {
    pub fn max_harnack_ratio(&self) -> f64 {
        self.annuli
            .iter()
            .map(|a| a.harnack_ratio)
            .fold(0.0, f64::max)
    }
}

/// `v - u` on the nodes of `dB_r` (within `h/2` of the circle around the
/// origin) where `u > 0` and the regularity scale of `u` exceeds `rho r`.
fn annulus_values(
    u: &GridField,
    v: &GridField,
    scales: &RegularityScaleField<'_>,
    rho: f64,
    r: f64,
) -> Vec<f64> {
    let lat = u.lattice();
    let h = u.h();
    (0..lat.len())
        .filter(|&id| lat.kind[id] == NodeKind::Interior && u.values()[id] > 0.0)
        .filter_map(|id| {
            let p = lat.position_of(id);
            ((p[0].hypot(p[1]) - r).abs() <= 0.5 * h && scales.exceeds(p, rho * r))
                .then(|| v.values()[id] - u.values()[id])
        })
        .collect()
}

/// Harnack ratios and decay factors of `v - u` on scale-filtered circles.
pub fn difference_diagnostics(
    u: &GridField,
    v: &GridField,
    rho: f64,
    radii: &[f64],
) -> Result<DifferenceDiagnostics, SweepError> {
    if u.values().len() != v.values().len() {
        return Err(GridError::SizeMismatch {
            expected: u.values().len(),
            got: v.values().len(),
        }
        .into());
    }
    let room = u.geometry().boundary_distance([0.0, 0.0]);
    let scales = RegularityScaleField::new(u);
    let mut annuli = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) || r > room {
            return Err(GridError::RadiusOutOfDomain {
                center: [0.0, 0.0],
                radius: r,
                room,
            }
            .into());
        }
        let vals = annulus_values(u, v, &scales, rho, r);
        if vals.is_empty() {
            return Err(SweepError::EmptyAnnulus { radius: r });
        }
        let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inf = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let harnack_ratio = if inf > 0.0 { sup / inf } else { f64::INFINITY };
        let outer = DECAY_FACTOR * r;
        let decay_factor = (outer <= room)
            .then(|| annulus_values(u, v, &scales, rho, outer))
            .filter(|w| !w.is_empty() && sup > 0.0)
            .map(|w| w.iter().copied().fold(f64::NEG_INFINITY, f64::max) / sup);
        annuli.push(AnnulusRecord {
            radius: r,
            nodes: vals.len(),
            sup,
            inf,
            harnack_ratio,
            decay_factor,
        });
    }
    Ok(DifferenceDiagnostics { rho, annuli })
}

/// Default singular probes: the origin for double-polar grids, none for
/// planar ones.
pub fn default_singular_probes(geometry: &GridGeometry) -> Vec<[f64; 2]> {
    match geometry.mode {
        GeometryMode::DoublePolar(_) => vec![[0.0, 0.0]],
        GeometryMode::Planar => Vec::new(),
    }
}
