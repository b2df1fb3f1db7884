//! Acceptance criteria at their stated resolutions and tolerances.
//!
//! Runs without the libtest harness: every criterion is evaluated, one
//! `criterion N: PASS|FAIL` line is printed per criterion in order, and the
//! process exits nonzero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use onephase_core::cone::{section_integrals, shoot_profile, ConeProfile, SymmetrySplit};
use onephase_core::grid::{
    free_boundary, minimize, regularity_scale, weiss_series, FreeBoundaryCurve, GridField,
    GridGeometry, Lattice, MinimizeOptions, Trace,
};
use onephase_core::spectrum::{
    golden_table, jacobi_field_check, principal_eigenvalue, SpectralTable,
};
use onephase_core::sweep::{
    default_singular_probes, difference_diagnostics, log_grid, run_family, FamilySpec, SweepError,
    SweepReport,
};

const TABLE_LAMBDA: [f64; 8] = [5.70, 6.70, 7.70, 8.70, 9.70, 10.70, 11.70, 12.70];
const TABLE_GAMMA: [f64; 8] = [
    1.7573, 1.4839, 1.3672, 1.2985, 1.2523, 1.2189, 1.1934, 1.1734,
];

/// Outcome of one criterion.
struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Verdict {
    Verdict { ok, detail }
}

struct Table {
    table: SpectralTable,
    seconds: f64,
}

fn table() -> &'static Table {
    static CELL: OnceLock<Table> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let table = golden_table(7, 14, 4096).expect("table");
        Table {
            table,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

fn matched_profiles() -> Vec<ConeProfile<f64>> {
    table()
        .table
        .rows
        .iter()
        .map(|r| shoot_profile::<f64>(r.d, SymmetrySplit::new(r.m, r.k).unwrap(), 1e-10).unwrap())
        .collect()
}

fn criterion_01_eigenvalue_table() -> Verdict {
    let t = table();
    let worst = t
        .table
        .rows
        .iter()
        .zip(TABLE_LAMBDA)
        .map(|(r, l)| (r.lambda - l).abs())
        .fold(0.0, f64::max);
    let ok = t.table.rows.len() == 8 && worst <= 0.02 && t.seconds < 10.0;
    verdict(
        ok,
        format!(
            "{} rows, max |lambda - table| = {worst:.4}, {:.2} s at n = 4096",
            t.table.rows.len(),
            t.seconds
        ),
    )
}

fn criterion_02_exponent_table() -> Verdict {
    let rows = &table().table.rows;
    let mut worst = 0.0f64;
    let mut identity = 0.0f64;
    let mut above_one = true;
    for (r, g) in rows.iter().zip(TABLE_GAMMA) {
        worst = worst.max((r.gamma - g).abs());
        identity = identity.max((r.gamma * (r.gamma - r.d as f64 + 2.0) + r.lambda).abs());
        above_one &= r.gamma > 1.0;
    }
    verdict(
        worst <= 5e-3 && identity <= 1e-12 && above_one && rows.len() == 8,
        format!(
            "max |gamma - table| = {worst:.2e}, root identity {identity:.1e}, all > 1: {above_one}"
        ),
    )
}

fn criterion_03_affine_in_dimension() -> Verdict {
    let rows = &table().table.rows;
    let steps: Vec<f64> = rows.windows(2).map(|w| w[1].lambda - w[0].lambda).collect();
    let worst = steps.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    verdict(
        steps.len() == 7 && worst <= 0.05,
        format!("max |step - 1| = {worst:.4} over {} steps", steps.len()),
    )
}

fn criterion_04_stability_bound_and_flat_split() -> Verdict {
    let t = &table().table;
    let mut ok = !t.all.is_empty();
    let mut margin = f64::INFINITY;
    for r in &t.all {
        let bound = ((r.d - 2) as f64).powi(2) / 4.0;
        ok &= r.lambda <= bound + 1e-9;
        margin = margin.min(bound - r.lambda);
    }
    let mut flat_worst = 0.0f64;
    let mut phi_worst = 0.0f64;
    for d in 7..=14 {
        let p = shoot_profile::<f64>(d, SymmetrySplit::flat(d), 1e-10).unwrap();
        let e = principal_eigenvalue(&p, 4096).unwrap();
        flat_worst = flat_worst.max(e.lambda.abs());
        phi_worst = e
            .phi
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(phi_worst, f64::max);
    }
    ok &= flat_worst <= 1e-8 && phi_worst <= 1e-6;
    verdict(ok,
        format!(
            "{} splits, min bound margin {margin:.3}, flat |lambda| <= {flat_worst:.1e}, |phi - 1| <= {phi_worst:.1e}",
            t.all.len()
        ),
    )
}

fn criterion_05_hessian_inequality() -> Verdict {
    let mut ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut least = f64::INFINITY;
    for p in matched_profiles() {
        let s = section_integrals(&p).unwrap();
        ok &= s.hessian_sq <= s.mean_curv_total + 1e-6 && s.hessian_sq > 0.0;
        worst_excess = worst_excess.max(s.hessian_sq - s.mean_curv_total);
        least = least.min(s.hessian_sq);
    }
    verdict(
        ok,
        format!("max (hessian - mean curvature) = {worst_excess:.2e}, min hessian = {least:.3}"),
    )
}

fn d7_split() -> SymmetrySplit {
    SymmetrySplit::new(1, 6).unwrap()
}

fn d7_profile() -> Arc<ConeProfile<f64>> {
    static CELL: OnceLock<Arc<ConeProfile<f64>>> = OnceLock::new();
    CELL.get_or_init(|| Arc::new(shoot_profile::<f64>(7, d7_split(), 1e-10).unwrap()))
        .clone()
}

fn criterion_06_weiss_monotone_and_constant() -> Verdict {
    let h = 1.0 / 512.0;
    let profile = d7_profile();
    let geom = GridGeometry::double_polar(d7_split(), 1.0, h);
    let u = minimize(
        geom,
        &Trace::Cone(profile.clone()),
        &MinimizeOptions::default(),
    )
    .unwrap();
    let radii: Vec<f64> = (2..=9).map(|j| 0.1 * j as f64).collect();
    let w = weiss_series(&u, [0.0, 0.0], &radii).unwrap();
    let density = profile.weiss_density;
    let rel = w
        .values
        .iter()
        .map(|v| (v - density).abs() / density)
        .fold(0.0, f64::max);
    let (drop, spread) = (w.worst_drop(), w.spread());
    verdict(
        drop <= 10.0 * h && spread <= 10.0 * h && rel <= 0.05,
        format!(
            "worst drop {:.2} h, spread {:.2} h, max relative gap to cone density {rel:.2e}",
            drop / h,
            spread / h
        ),
    )
}

fn flat_no_extension(h: f64, c: f64) -> GridField {
    let opts = MinimizeOptions {
        extension_start: false,
        ..MinimizeOptions::default()
    };
    let geom = GridGeometry::planar_disk(1.0, h);
    minimize(geom, &Trace::flat([1.0, 0.0], c), &opts).unwrap()
}

fn criterion_07_flat_benchmark() -> Verdict {
    let c = 0.3;
    let exact = FreeBoundaryCurve {
        polylines: vec![vec![[c, -0.5], [c, 0.5]]],
        deficits: vec![vec![0.0, 0.0]],
        h: 0.0,
    };
    let mut ok = true;
    let mut errors = Vec::new();
    let mut weiss_worst = 0.0f64;
    let half_ball = std::f64::consts::FRAC_PI_2;
    for inv in [128.0, 256.0, 512.0] {
        let h = 1.0 / inv;
        let u = flat_no_extension(h, c);
        let curve = free_boundary(&u).unwrap().restricted(|p| p[1].abs() <= 0.5);
        let err = curve.hausdorff(&exact);
        let w = weiss_series(&u, [c, 0.0], &[0.2, 0.4]).unwrap();
        let werr = w
            .values
            .iter()
            .map(|v| (v - half_ball).abs())
            .fold(0.0, f64::max);
        ok &= err <= 2.0 * h && werr <= 5.0 * h;
        weiss_worst = weiss_worst.max(werr / h);
        errors.push((h, err));
    }
    // O(h): bounded error-to-spacing ratio and no growth under refinement.
    let ratios: Vec<f64> = errors.iter().map(|(h, e)| e / h).collect();
    ok &= ratios.iter().all(|r| *r <= 2.0) && errors[2].1 < errors[0].1;
    verdict(
        ok,
        format!(
            "Hausdorff / h = {:.2}, {:.2}, {:.2}; Weiss error <= {weiss_worst:.2} h",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn flat_family() -> &'static Result<SweepReport, SweepError> {
    static CELL: OnceLock<Result<SweepReport, SweepError>> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = FamilySpec {
            base: Trace::flat([1.0, 0.0], 0.0),
            t_grid: vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.1],
            geometry: GridGeometry::planar_disk(1.0, 1.0 / 256.0),
            options: MinimizeOptions::default(),
            probe_window: [0.0, 0.5],
            singular_probes: Vec::new(),
            relative_gap: 0.25,
            weiss_radii: Vec::new(),
        };
        run_family(&spec)
    })
}

/// Lifted d = 7 cone family at spacing `1 / inv`.
fn cone_family(inv: u32) -> &'static Result<SweepReport, SweepError> {
    static CELLS: [OnceLock<Result<SweepReport, SweepError>>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match inv {
        128 => 0,
        256 => 1,
        512 => 2,
        _ => panic!("unsupported resolution 1/{inv}"),
    };
    CELLS[slot].get_or_init(|| {
        let profile = d7_profile();
        let h = 1.0 / inv as f64;
        let geom = GridGeometry::double_polar(d7_split(), 1.0, h);
        let mut t_grid = vec![0.0];
        t_grid.extend(log_grid(1e-4, 1e-1, 7, 10.0 * h * h));
        let spec = FamilySpec {
            base: Trace::Cone(profile.clone()),
            t_grid,
            geometry: geom,
            options: MinimizeOptions::default(),
            probe_window: [0.5, 0.85],
            singular_probes: default_singular_probes(&geom),
            relative_gap: 0.5 * (profile.weiss_density / geom.flat_density() - 1.0),
            weiss_radii: (2..=9).map(|j| 0.1 * j as f64).collect(),
        };
        run_family(&spec)
    })
}

fn linear_slope() -> Option<f64> {
    flat_family()
        .as_ref()
        .ok()
        .and_then(|r| r.linear_fit.as_ref())
        .map(|f| f.slope)
}

fn criterion_08_ordering_and_linear_cleaning() -> Verdict {
    let flat = flat_family();
    let slope = linear_slope();
    let mut ok = flat.is_ok() && slope.is_some_and(|s| (s - 1.0).abs() <= 0.05);
    let mut notes = vec![format!("flat slope {slope:?}")];
    for inv in [128, 256, 512] {
        let violated = matches!(cone_family(inv), Err(SweepError::OrderingViolation { .. }));
        ok &= !violated;
        notes.push(format!("cone 1/{inv} ordering ok: {}", !violated));
    }
    if let Err(e) = flat {
        notes.push(format!("flat family: {e}"));
    }
    verdict(ok, notes.join(", "))
}

fn criterion_09_superlinear_cleaning() -> Verdict {
    let gamma = table().table.rows[0].gamma;
    let limit = 1.0 / (1.0 + gamma) + 0.05;
    let linear = linear_slope();
    let mut slopes = Vec::new();
    let mut notes = Vec::new();
    for inv in [128, 256, 512] {
        match cone_family(inv) {
            Ok(r) => match &r.superlinear_fit {
                Some(f) => {
                    slopes.push(f.slope);
                    notes.push(format!(
                        "1/{inv}: slope {:.3} [{:.3}, {:.3}] from {} points",
                        f.slope,
                        f.slope_interval[0],
                        f.slope_interval[1],
                        f.pairs.len()
                    ));
                }
                None => notes.push(format!("1/{inv}: no fit")),
            },
            Err(e) => notes.push(format!("1/{inv}: {e}")),
        }
    }
    let complete = slopes.len() == 3;
    let below_limit = complete && slopes.iter().all(|s| *s <= limit);
    let gap = linear.is_some_and(|l| complete && slopes.iter().all(|s| l - s >= 0.2));
    let spread = if complete {
        slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - slopes.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    let stable = spread <= 0.05;
    verdict(
        below_limit && gap && stable,
        format!(
            "{}; limit {limit:.3}, linear slope {linear:?}, spread {spread:.3}",
            notes.join("; ")
        ),
    )
}

/// `u = 1 + (x^2 - y^2) / 2` rescaled to `u(r x) / r` on the matching lattice.
fn saddle(h: f64, r: f64) -> GridField {
    let geom = GridGeometry::planar_disk(1.0 / r, h / r);
    let lat = Lattice::new(geom).unwrap();
    let values = (0..lat.len())
        .map(|id| {
            let [x, y] = lat.position_of(id);
            let (x, y) = (r * x, r * y);
            (1.0 + 0.5 * (x * x - y * y)) / r
        })
        .collect();
    GridField::from_values(geom, values).unwrap()
}

fn criterion_10_regularity_scale_and_harnack() -> Verdict {
    let h = 1.0 / 128.0;
    let u = saddle(h, 1.0);
    let mut scale_worst = 0.0f64;
    for r in [0.5, 2.0, 4.0] {
        let ur = saddle(h, r);
        for p in [[0.0, 0.0], [0.2, -0.1], [-0.35, 0.3], [0.5, 0.5]] {
            let a = regularity_scale(&u, p) / r;
            let b = regularity_scale(&ur, [p[0] / r, p[1] / r]);
            // Tolerance in spacings of the rescaled grid.
            scale_worst = scale_worst.max((a - b).abs() / (h / r));
        }
    }

    let rho = 0.25;
    let radii = [0.2, 0.3, 0.4, 0.5, 0.6];
    let mut ratios = Vec::new();
    let mut notes = Vec::new();
    for inv in [256, 512] {
        let Ok(report) = cone_family(inv) else {
            notes.push(format!("1/{inv}: sweep failed"));
            continue;
        };
        let t = report
            .summaries
            .iter()
            .map(|s| s.t)
            .min_by(|a, b| (a - 1e-2).abs().total_cmp(&(b - 1e-2).abs()))
            .unwrap();
        match (report.field(0.0), report.field(t)) {
            (Some(u0), Some(ut)) => match difference_diagnostics(u0, ut, rho, &radii) {
                Ok(d) => ratios.push(d.annuli.iter().map(|a| a.harnack_ratio).collect::<Vec<_>>()),
                Err(e) => notes.push(format!("1/{inv}: {e}")),
            },
            _ => notes.push(format!("1/{inv}: missing field")),
        }
    }
    let drift = if ratios.len() == 2 {
        ratios[0]
            .iter()
            .zip(&ratios[1])
            .map(|(a, b)| (b / a - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    for (inv, r) in [256, 512].iter().zip(&ratios) {
        let shown: Vec<String> = r.iter().map(|x| format!("{x:.3}")).collect();
        notes.push(format!("1/{inv} Harnack {}", shown.join(" ")));
    }
    verdict(
        scale_worst <= 2.0 && drift <= 0.2,
        format!(
            "scale error <= {scale_worst:.2} h, Harnack drift {drift:.3}; {}",
            notes.join("; ")
        ),
    )
}

fn criterion_11_jacobi_field_identity() -> Verdict {
    let mut worst_laplace = 0.0f64;
    let mut worst_decay = 0.0f64;
    for p in matched_profiles() {
        let e = principal_eigenvalue(&p, 2048).unwrap();
        let check = jacobi_field_check(&p, &e, e.gamma_minus);
        worst_laplace = worst_laplace.max(check.laplace);
        worst_decay = worst_decay.max(check.decay);
    }
    verdict(
        worst_laplace < 1e-4 && worst_decay < 1e-4,
        format!("residual {worst_laplace:.2e}, decay {worst_decay:.2e}"),
    )
}

type Criterion = fn() -> Verdict;

fn main() -> ExitCode {
    let criteria: [(u32, Criterion); 11] = [
        (1, criterion_01_eigenvalue_table),
        (2, criterion_02_exponent_table),
        (3, criterion_03_affine_in_dimension),
        (4, criterion_04_stability_bound_and_flat_split),
        (5, criterion_05_hessian_inequality),
        (6, criterion_06_weiss_monotone_and_constant),
        (7, criterion_07_flat_benchmark),
        (8, criterion_08_ordering_and_linear_cleaning),
        (9, criterion_09_superlinear_cleaning),
        (10, criterion_10_regularity_scale_and_harnack),
        (11, criterion_11_jacobi_field_identity),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    // Independent criteria run concurrently; shared sweeps are computed once.
    let results: Vec<(u32, Verdict)> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria
            .iter()
            .filter(|(n, _)| filter.is_empty() || filter.iter().any(|f| f == &n.to_string()))
            .map(|&(n, run)| {
                let handle = scope.spawn(move || {
                    catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        verdict(false, format!("panicked: {msg}"))
                    })
                });
                (n, handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(n, h)| (n, h.join().expect("criterion thread")))
            .collect()
    });
    let mut failed = 0;
    for (n, v) in &results {
        println!(
            "criterion {n}: {} | {}",
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
