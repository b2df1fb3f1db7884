//! `onephase`: cone profiles, spectra, grid solves and sweeps from the shell.
//!
//! Exit status 0 on success, 1 when a computation fails or a regression
//! check finds deviations, 2 on invalid usage or configuration.

mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use onephase_core::cone::shoot_profile;
use onephase_core::grid::{
    free_boundary, minimize, weiss_series, GeometryMode, MinimizeOptions, Trace, MIN_WEISS_CELLS,
};
use onephase_core::spectrum::{golden_table, principal_eigenvalue, reference_lambda, TableRow};
use onephase_core::sweep::{
    default_singular_probes, difference_diagnostics, log_grid, run_family, FamilySpec,
};
use onephase_core::{ConeProfile, GridGeometry, SymmetrySplit};
use onephase_io::{
    compare, format_real, loglog_svg, output_root, polylines_svg, read_field_snapshot,
    reference_golden, write_csv, write_curve_csv, write_field_snapshot, write_json, write_profile,
    write_sweep, write_text, write_weiss_csv, Command, EmittedFile, GoldenFile, GoldenRecord,
    Manifest, Provenance, RunConfig,
};

use args::{DataArg, DimRange, GeometryArg, TGrid, Values};

const SHOOT_TOL: f64 = 1e-10;
/// Relative density gap used for planar sweeps, which carry no cone.
const PLANAR_RELATIVE_GAP: f64 = 0.25;

#[derive(Parser)]
#[command(name = "onephase", version, about = "One-phase free boundary toolkit")]
struct Cli {
    /// Output root; defaults to $ONEPHASE_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shoot a homogeneous cone and write its profile.
    Cone {
        #[arg(long, value_parser = args::dim)]
        dim: usize,
        #[arg(long, value_parser = args::split)]
        split: SymmetrySplit,
    },
    /// Principal eigenvalue and exponents of one cone.
    Spectrum {
        #[arg(long, value_parser = args::dim)]
        dim: usize,
        /// Defaults to the split closest to the reference eigenvalue.
        #[arg(long, value_parser = args::split)]
        split: Option<SymmetrySplit>,
        #[arg(short = 'n', default_value = "4096", value_parser = args::intervals)]
        n: usize,
    },
    /// Eigenvalue table with golden regression.
    Table {
        #[arg(long, default_value = "7..14", value_parser = args::dim_range)]
        dims: DimRange,
        #[arg(short = 'n', default_value = "4096", value_parser = args::intervals)]
        n: usize,
        /// Golden file; defaults to the built-in reference records.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Minimize the discrete energy for one boundary datum.
    Solve {
        #[arg(long, value_parser = args::geometry)]
        geometry: GeometryArg,
        #[arg(long, value_parser = args::data)]
        data: DataArg,
        #[arg(long, default_value = "1", value_parser = args::positive)]
        radius: f64,
        #[arg(long, default_value = "1/128", value_parser = args::spacing)]
        h: f64,
    },
    /// Lifted family `base + t` and its separation exponents.
    Sweep {
        #[arg(long, value_parser = ["flat", "cone"])]
        base: String,
        /// Required for `--base cone`.
        #[arg(long, value_parser = args::geometry)]
        geometry: Option<GeometryArg>,
        #[arg(long, default_value = "log:1e-4:1e-1:9", value_parser = args::t_grid)]
        t_grid: TGrid,
        #[arg(long, default_value = "1", value_parser = args::positive)]
        radius: f64,
        #[arg(long, default_value = "1/128", value_parser = args::spacing)]
        h: f64,
        /// Probe annulus as fractions of the radius.
        #[arg(long, value_parser = args::window)]
        window: Option<[f64; 2]>,
    },
    /// Harnack and decay diagnostics of `B - A` for two snapshots.
    Diagnose {
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        pair: Vec<PathBuf>,
        #[arg(long, value_parser = args::positive)]
        rho: f64,
        /// Circle radii; defaults to 0.2..0.6 of the domain radius.
        #[arg(long, value_parser = args::radius_list)]
        radii: Option<Values>,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn compute(e: impl std::fmt::Display) -> Self {
        Self::Compute(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let root = output_root(cli.out.as_deref());
    match run(cli.command, &root) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Records the effective configuration; range violations are usage errors.
fn record_config(cfg: &RunConfig, manifest: &mut Manifest) -> Outcome {
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let file = write_json(&cfg.output_dir.join("config.json"), cfg).map_err(Failure::compute)?;
    manifest.extend([file]);
    Ok(())
}

fn finish(dir: &Path, manifest: &Manifest) -> Outcome {
    manifest.write(dir).map_err(Failure::compute)?;
    Ok(())
}

fn run(cmd: Cmd, root: &Path) -> Outcome {
    match cmd {
        Cmd::Cone { dim, split } => cone(root, dim, split),
        Cmd::Spectrum { dim, split, n } => spectrum(root, dim, split, n),
        Cmd::Table { dims, n, golden } => table(root, dims, n, golden.as_deref()),
        Cmd::Solve {
            geometry,
            data,
            radius,
            h,
        } => solve(root, geometry, data, radius, h),
        Cmd::Sweep {
            base,
            geometry,
            t_grid,
            radius,
            h,
            window,
        } => sweep(root, &base, geometry, t_grid, radius, h, window),
        Cmd::Diagnose { pair, rho, radii } => {
            diagnose(root, &pair[0], &pair[1], rho, radii.map(|r| r.0))
        }
    }
}

fn check_split(dim: usize, split: SymmetrySplit) -> Outcome {
    if split.dim() != dim {
        return Err(Failure::Usage(format!(
            "--split {split} has m + k = {}, but --dim is {dim}",
            split.dim()
        )));
    }
    Ok(())
}

fn shoot(split: SymmetrySplit) -> Result<ConeProfile<f64>, Failure> {
    shoot_profile::<f64>(split.dim(), split, SHOOT_TOL).map_err(Failure::compute)
}

fn cone(root: &Path, dim: usize, split: SymmetrySplit) -> Outcome {
    check_split(dim, split)?;
    let dir = root.join("cone");
    let mut cfg = RunConfig::new(Command::Cone);
    cfg.dims = vec![dim];
    cfg.splits = vec![split];
    cfg.shoot_tol = SHOOT_TOL;
    cfg.output_dir = dir.clone();
    let mut manifest = Manifest::default();
    record_config(&cfg, &mut manifest)?;
    let profile = shoot(split)?;
    let stem = format!("cone_d{dim}_m{}_k{}", split.m, split.k);
    manifest.extend(write_profile(&dir, &stem, &profile).map_err(Failure::compute)?);
    println!("d,m,k,theta_fb,H,weiss_density,admissible");
    println!(
        "{dim},{},{},{},{},{},{}",
        split.m,
        split.k,
        format_real(profile.theta_fb),
        format_real(profile.mean_curvature),
        format_real(profile.weiss_density),
        profile.admissible
    );
    finish(&dir, &manifest)
}

fn spectrum(root: &Path, dim: usize, split: Option<SymmetrySplit>, n: usize) -> Outcome {
    let splits: Vec<SymmetrySplit> = match split {
        Some(s) => {
            check_split(dim, s)?;
            vec![s]
        }
        None => SymmetrySplit::enumerate(dim).collect(),
    };
    let dir = root.join("spectrum");
    let mut cfg = RunConfig::new(Command::Spectrum);
    cfg.dims = vec![dim];
    cfg.splits = splits.clone();
    cfg.n = n;
    cfg.output_dir = dir.clone();
    let mut manifest = Manifest::default();
    record_config(&cfg, &mut manifest)?;

    let mut rows = Vec::new();
    let mut last_err = None;
    for s in splits {
        let solved = shoot(s).and_then(|p| principal_eigenvalue(&p, n).map_err(Failure::compute));
        match solved {
            Ok(e) => rows.push((s, e)),
            Err(e) => last_err = Some(e),
        }
    }
    if split.is_none() {
        if let Some(target) = reference_lambda(dim) {
            rows.sort_by(|a, b| {
                (a.1.lambda - target)
                    .abs()
                    .total_cmp(&(b.1.lambda - target).abs())
            });
            rows.truncate(1);
        }
    }
    if rows.is_empty() {
        return Err(last_err.unwrap_or_else(|| Failure::Compute("no admissible split".into())));
    }
    let header = [
        "d",
        "m",
        "k",
        "lambda",
        "gamma_minus",
        "gamma_plus",
        "certified_error",
    ];
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|(s, e)| {
            vec![
                dim.to_string(),
                s.m.to_string(),
                s.k.to_string(),
                format_real(e.lambda),
                format_real(e.gamma_minus),
                format_real(e.gamma_plus),
                format_real(e.certified_error),
            ]
        })
        .collect();
    print_csv(&header, &records);
    let file = write_csv(&dir.join(format!("spectrum_d{dim}.csv")), &header, records)
        .map_err(Failure::compute)?;
    manifest.extend([file]);
    finish(&dir, &manifest)
}

fn print_csv(header: &[&str], rows: &[Vec<String>]) {
    println!("{}", header.join(","));
    for r in rows {
        println!("{}", r.join(","));
    }
}

fn produced_record(key: String, d: usize, value: f64, provenance: Provenance) -> GoldenRecord {
    GoldenRecord {
        key,
        d,
        value,
        provenance,
        tolerance: 0.0,
        anchor: "produced".into(),
    }
}

fn table(root: &Path, dims: DimRange, n: usize, golden: Option<&Path>) -> Outcome {
    let dir = root.join("table");
    let mut cfg = RunConfig::new(Command::Table);
    cfg.dims = (dims.lo..=dims.hi).collect();
    cfg.n = n;
    cfg.output_dir = dir.clone();
    let mut manifest = Manifest::default();
    record_config(&cfg, &mut manifest)?;
    let golden = match golden {
        Some(p) => GoldenFile::load(p).map_err(|e| Failure::Usage(format!("--golden: {e}")))?,
        None => reference_golden(),
    }
    .restricted(dims.lo, dims.hi);

    let table = golden_table(dims.lo, dims.hi, n).map_err(Failure::compute)?;
    let header = [
        "d",
        "m",
        "k",
        "theta_fb",
        "H",
        "lambda",
        "gamma",
        "certified_error",
    ];
    let rows: Vec<Vec<String>> = table.rows.iter().map(table_row).collect();
    print_csv(&header, &rows);
    manifest.extend([write_csv(&dir.join("table.csv"), &header, rows).map_err(Failure::compute)?]);

    let mut produced = Vec::new();
    for r in &table.rows {
        let cone = format!("d{}_m{}_k{}", r.d, r.m, r.k);
        use Provenance::*;
        produced.push(produced_record(
            format!("lambda.d{}", r.d),
            r.d,
            r.lambda,
            PublishedTable,
        ));
        produced.push(produced_record(
            format!("gamma.d{}", r.d),
            r.d,
            r.gamma,
            PublishedTable,
        ));
        produced.push(produced_record(
            format!("theta_fb.{cone}"),
            r.d,
            r.theta_fb,
            DerivedOracle,
        ));
        produced.push(produced_record(
            format!("mean_curvature.{cone}"),
            r.d,
            r.mean_curvature,
            DerivedOracle,
        ));
        let flat = shoot(SymmetrySplit::flat(r.d))?;
        let eig = principal_eigenvalue(&flat, n).map_err(Failure::compute)?;
        produced.push(produced_record(
            format!("lambda_flat.d{}", r.d),
            r.d,
            eig.lambda,
            Trivial,
        ));
        if r.d == 7 {
            let p = shoot(SymmetrySplit::new(1, 6).map_err(Failure::compute)?)?;
            produced.push(produced_record(
                "weiss_density.d7_m1_k6".into(),
                7,
                p.weiss_density,
                DerivedOracle,
            ));
        }
    }
    let produced = GoldenFile::new(produced);
    manifest.extend([write_json(&dir.join("produced.json"), &produced).map_err(Failure::compute)?]);
    let report = compare(&golden, &produced).map_err(Failure::compute)?;
    manifest.extend([write_json(&dir.join("regression.json"), &report).map_err(Failure::compute)?]);
    finish(&dir, &manifest)?;
    if report.passed() {
        eprintln!(
            "golden: {} keys within tolerance (max relative deviation {:.3e})",
            report.deviations.len(),
            report.max_relative
        );
        Ok(())
    } else {
        Err(Failure::Compute(format!(
            "golden regression failed:\n{}",
            report.diff().trim_end()
        )))
    }
}

fn table_row(r: &TableRow) -> Vec<String> {
    vec![
        r.d.to_string(),
        r.m.to_string(),
        r.k.to_string(),
        format_real(r.theta_fb),
        format_real(r.mean_curvature),
        format_real(r.lambda),
        format_real(r.gamma),
        format_real(r.certified_error),
    ]
}

fn build_geometry(arg: GeometryArg, radius: f64, h: f64) -> Result<GridGeometry, Failure> {
    if h > radius / 4.0 {
        return Err(Failure::Usage(format!(
            "--h {h} must not exceed --radius / 4 = {}",
            radius / 4.0
        )));
    }
    let geom = match arg {
        GeometryArg::Planar => GridGeometry::planar_disk(radius, h),
        GeometryArg::DoublePolar(s) => GridGeometry::double_polar(s, radius, h),
    };
    geom.validate()
        .map_err(|e| Failure::Usage(format!("--geometry: {e}")))?;
    Ok(geom)
}

fn cone_trace(geom: &GridGeometry) -> Result<(Trace, Arc<ConeProfile<f64>>), Failure> {
    let GeometryMode::DoublePolar(split) = geom.mode else {
        return Err(Failure::Usage("cone data needs --geometry dp:M,K".into()));
    };
    let profile = Arc::new(shoot(split)?);
    Ok((Trace::Cone(profile.clone()), profile))
}

fn grid_config(command: Command, geom: &GridGeometry, dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::new(command);
    cfg.dims = vec![geom.dimension()];
    if let GeometryMode::DoublePolar(s) = geom.mode {
        cfg.splits = vec![s];
    }
    cfg.grid.radius = geom.radius;
    cfg.grid.h = geom.h;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

/// Radii `0.2 R .. 0.9 R` that resolve at least `MIN_WEISS_CELLS` spacings.
fn weiss_ladder(geom: &GridGeometry) -> Vec<f64> {
    (2..=9)
        .map(|j| 0.1 * j as f64 * geom.radius)
        .filter(|r| *r >= MIN_WEISS_CELLS * geom.h)
        .collect()
}

fn solve(root: &Path, geometry: GeometryArg, data: DataArg, radius: f64, h: f64) -> Outcome {
    let geom = build_geometry(geometry, radius, h)?;
    let dir = root.join("solve");
    let cfg = grid_config(Command::Solve, &geom, &dir);
    let mut manifest = Manifest::default();
    record_config(&cfg, &mut manifest)?;
    let trace = match data {
        DataArg::Flat(c) => Trace::flat([1.0, 0.0], c * radius),
        DataArg::Cone => cone_trace(&geom)?.0,
        DataArg::File(p) => {
            let field =
                read_field_snapshot(&p).map_err(|e| Failure::Usage(format!("--data: {e}")))?;
            Trace::Sampled(Arc::new(field))
        }
    };
    let field = minimize(geom, &trace, &MinimizeOptions::default()).map_err(Failure::compute)?;
    manifest.extend(write_field_snapshot(&dir, "field", &field).map_err(Failure::compute)?);
    println!("energy,{}", format_real(field.energy()));
    println!("sweeps,{}", field.stats.sweeps);
    println!("converged,{}", field.stats.converged);
    match free_boundary(&field) {
        Ok(curve) => {
            println!("free_boundary_vertices,{}", curve.vertex_count());
            manifest.extend([write_curve_csv(&dir.join("free_boundary.csv"), &curve)
                .map_err(Failure::compute)?]);
            manifest.extend([emit_svg(
                &dir.join("free_boundary.svg"),
                &polylines_svg("free boundary", &curve.polylines),
            )?]);
        }
        Err(e) => println!("free_boundary,{e}"),
    }
    let radii = weiss_ladder(&geom);
    if !radii.is_empty() {
        let series = weiss_series(&field, [0.0, 0.0], &radii).map_err(Failure::compute)?;
        for (r, w) in series.radii.iter().zip(&series.values) {
            println!("weiss,{},{}", format_real(*r), format_real(*w));
        }
        manifest
            .extend([write_weiss_csv(&dir.join("weiss.csv"), &series).map_err(Failure::compute)?]);
    }
    finish(&dir, &manifest)
}

fn emit_svg(path: &Path, text: &str) -> Result<EmittedFile, Failure> {
    write_text(path, text).map_err(Failure::compute)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    root: &Path,
    base: &str,
    geometry: Option<GeometryArg>,
    t_values: TGrid,
    radius: f64,
    h: f64,
    window: Option<[f64; 2]>,
) -> Outcome {
    let geometry = match (base, geometry) {
        (_, Some(g)) => g,
        ("flat", None) => GeometryArg::Planar,
        _ => return Err(Failure::Usage("--base cone needs --geometry dp:M,K".into())),
    };
    let geom = build_geometry(geometry, radius, h)?;
    let dir = root.join("sweep");
    let cfg = grid_config(Command::Sweep, &geom, &dir);
    let mut manifest = Manifest::default();
    record_config(&cfg, &mut manifest)?;

    let (trace, relative_gap, default_window, weiss_radii) = if base == "cone" {
        let (trace, profile) = cone_trace(&geom)?;
        let gap = 0.5 * (profile.weiss_density / geom.flat_density() - 1.0);
        (trace, gap, [0.5, 0.85], weiss_ladder(&geom))
    } else {
        (
            Trace::flat([1.0, 0.0], 0.0),
            PLANAR_RELATIVE_GAP,
            [0.0, 0.5],
            Vec::new(),
        )
    };
    let window = window.unwrap_or(default_window);
    let mut spec = FamilySpec {
        base: trace,
        t_grid: vec![0.0],
        geometry: geom,
        options: MinimizeOptions::default(),
        probe_window: [window[0] * radius, window[1] * radius],
        singular_probes: default_singular_probes(&geom),
        relative_gap,
        weiss_radii,
    };
    match t_values {
        TGrid::Log { lo, hi, n } => spec.t_grid.extend(log_grid(lo, hi, n, spec.t_floor())),
        TGrid::List(values) => spec.t_grid.extend(values),
    }
    spec.validate()
        .map_err(|e| Failure::Usage(format!("--t-grid: {e}")))?;
    let report = run_family(&spec).map_err(Failure::compute)?;
    manifest.extend(write_sweep(&dir, "sweep", &report).map_err(Failure::compute)?);
    let curves: Vec<Vec<[f64; 2]>> = report
        .summaries
        .iter()
        .filter_map(|s| s.free_boundary.as_ref())
        .flat_map(|c| c.polylines.iter().cloned())
        .collect();
    manifest.extend([emit_svg(
        &dir.join("free_boundaries.svg"),
        &polylines_svg("free boundaries", &curves),
    )?]);
    let empty = Vec::new();
    let lin = report.linear_fit.as_ref().map_or(&empty, |f| &f.pairs);
    let sup = report.superlinear_fit.as_ref().map_or(&empty, |f| &f.pairs);
    manifest.extend([emit_svg(
        &dir.join("separation.svg"),
        &loglog_svg("separation", &[("linear", lin), ("superlinear", sup)]),
    )?]);
    for (name, fit) in [
        ("linear", &report.linear_fit),
        ("superlinear", &report.superlinear_fit),
    ] {
        match fit {
            Some(f) => println!(
                "{name}_slope,{},{},{}",
                format_real(f.slope),
                format_real(f.slope_interval[0]),
                format_real(f.slope_interval[1])
            ),
            None => println!("{name}_slope,,,"),
        }
    }
    finish(&dir, &manifest)
}

fn diagnose(root: &Path, a: &Path, b: &Path, rho: f64, radii: Option<Vec<f64>>) -> Outcome {
    let load =
        |p: &Path| read_field_snapshot(p).map_err(|e| Failure::Usage(format!("--pair: {e}")));
    let (u, v) = (load(a)?, load(b)?);
    let geom = *u.geometry();
    let dir = root.join("diagnose");
    let cfg = grid_config(Command::Diagnose, &geom, &dir);
    let mut manifest = Manifest::default();
    record_config(&cfg, &mut manifest)?;
    let radii = radii.unwrap_or_else(|| (2..=6).map(|j| 0.1 * j as f64 * geom.radius).collect());
    let diag = difference_diagnostics(&u, &v, rho, &radii).map_err(Failure::compute)?;
    println!("radius,nodes,sup,inf,harnack_ratio,decay_factor");
    for a in &diag.annuli {
        println!(
            "{},{},{},{},{},{}",
            format_real(a.radius),
            a.nodes,
            format_real(a.sup),
            format_real(a.inf),
            format_real(a.harnack_ratio),
            a.decay_factor.map(format_real).unwrap_or_default()
        );
    }
    manifest.extend([write_json(&dir.join("diagnostics.json"), &diag).map_err(Failure::compute)?]);
    finish(&dir, &manifest)
}
