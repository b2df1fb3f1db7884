//! Deterministic CSV, JSON and binary writers.
//!
//! Reals are written with 17 significant digits so every `f64` round-trips;
//! CSV rows end in a bare LF.

use std::fs;
use std::path::{Path, PathBuf};

use onephase_core::grid::{FreeBoundaryCurve, WeissSeries};
use onephase_core::sweep::SweepReport;
use onephase_core::{ConeProfile, GridField, GridGeometry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::IoError;

/// `x` with 17 significant digits in scientific notation.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    Ok(hex_digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmittedFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

fn emit(path: &Path, bytes: &[u8]) -> Result<EmittedFile, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))?;
    Ok(EmittedFile {
        path: path.to_path_buf(),
        sha256: hex_digest(bytes),
        bytes: bytes.len(),
    })
}

/// Writes text as is, e.g. an SVG document.
pub fn write_text(path: &Path, text: &str) -> Result<EmittedFile, IoError> {
    emit(path, text.as_bytes())
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<EmittedFile, IoError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| IoError::io(path, e.into_error()))?;
    emit(path, &bytes)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<EmittedFile, IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::json(path, e))?;
    text.push('\n');
    emit(path, text.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub theta_fb: f64,
    #[serde(rename = "H")]
    pub mean_curvature: f64,
    pub weiss_density: f64,
    pub admissible: bool,
}

pub fn profile_header(profile: &ConeProfile<f64>) -> ProfileHeader {
    ProfileHeader {
        d: profile.d,
        m: profile.split.m,
        k: profile.split.k,
        theta_fb: profile.theta_fb,
        mean_curvature: profile.mean_curvature,
        weiss_density: profile.weiss_density,
        admissible: profile.admissible,
    }
}

/// `{stem}.csv` with `theta, g, g_prime` and `{stem}.json` with the header.
pub fn write_profile(
    dir: &Path,
    stem: &str,
    profile: &ConeProfile<f64>,
) -> Result<Vec<EmittedFile>, IoError> {
    let rows = profile
        .theta
        .iter()
        .zip(&profile.g)
        .zip(&profile.g_prime)
        .map(|((t, g), gp)| vec![format_real(*t), format_real(*g), format_real(*gp)]);
    let csv = write_csv(
        &dir.join(format!("{stem}.csv")),
        &["theta", "g", "g_prime"],
        rows,
    )?;
    let json = write_json(&dir.join(format!("{stem}.json")), &profile_header(profile))?;
    Ok(vec![csv, json])
}

/// One row per vertex, tagged with its polyline index.
pub fn write_curve_csv(path: &Path, curve: &FreeBoundaryCurve) -> Result<EmittedFile, IoError> {
    let rows = curve.polylines.iter().enumerate().flat_map(|(i, line)| {
        line.iter()
            .map(move |[x, y]| vec![i.to_string(), format_real(*x), format_real(*y)])
    });
    write_csv(path, &["polyline", "x", "y"], rows)
}

pub fn write_weiss_csv(path: &Path, series: &WeissSeries) -> Result<EmittedFile, IoError> {
    let rows = series
        .radii
        .iter()
        .zip(&series.values)
        .map(|(r, w)| vec![format_real(*r), format_real(*w)]);
    write_csv(path, &["radius", "weiss"], rows)
}

/// Report JSON, per-`t` summary, pair table and log-log points.
pub fn write_sweep(
    dir: &Path,
    stem: &str,
    report: &SweepReport,
) -> Result<Vec<EmittedFile>, IoError> {
    let mut out = vec![write_json(&dir.join(format!("{stem}.json")), report)?];
    let summary = report.summaries.iter().map(|s| {
        vec![
            format_real(s.t),
            opt_real(s.energy),
            s.converged.to_string(),
            s.singular.len().to_string(),
            opt_real(s.weiss_drop),
            s.error.clone().unwrap_or_default(),
        ]
    });
    out.push(write_csv(
        &dir.join(format!("{stem}_summary.csv")),
        &[
            "t",
            "energy",
            "converged",
            "singular",
            "weiss_drop",
            "error",
        ],
        summary,
    )?);
    let pairs = report.pairs.iter().map(|p| {
        vec![
            format_real(p.s),
            format_real(p.t),
            opt_real(p.fb_distance),
            opt_real(p.singular_distance),
            p.resolved.to_string(),
        ]
    });
    out.push(write_csv(
        &dir.join(format!("{stem}_pairs.csv")),
        &["s", "t", "fb_distance", "singular_distance", "resolved"],
        pairs,
    )?);
    let mut loglog = Vec::new();
    for (name, fit) in [
        ("linear", &report.linear_fit),
        ("superlinear", &report.superlinear_fit),
    ] {
        if let Some(fit) = fit {
            for [x, y] in &fit.pairs {
                loglog.push(vec![name.to_string(), format_real(*x), format_real(*y)]);
            }
        }
    }
    out.push(write_csv(
        &dir.join(format!("{stem}_loglog.csv")),
        &["series", "x", "y"],
        loglog,
    )?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSidecar {
    pub geometry: GridGeometry,
    pub h: f64,
    pub energy: f64,
    pub iterations: usize,
    pub nx: usize,
    pub ny: usize,
    /// Hash of the binary payload.
    pub sha256: String,
}

/// `{stem}.bin` (little-endian `f64` per lattice node) and `{stem}.json`.
pub fn write_field_snapshot(
    dir: &Path,
    stem: &str,
    field: &GridField,
) -> Result<[EmittedFile; 2], IoError> {
    let bytes: Vec<u8> = field
        .values()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    let bin = emit(&dir.join(format!("{stem}.bin")), &bytes)?;
    let lattice = field.lattice();
    let sidecar = SnapshotSidecar {
        geometry: *field.geometry(),
        h: field.h(),
        energy: field.energy(),
        iterations: field.stats.sweeps,
        nx: lattice.nx,
        ny: lattice.ny,
        sha256: bin.sha256.clone(),
    };
    let json = write_json(&dir.join(format!("{stem}.json")), &sidecar)?;
    Ok([bin, json])
}

/// Reads `path` and its `.json` sidecar, verifying hash and shape.
pub fn read_field_snapshot(path: &Path) -> Result<GridField, IoError> {
    let side_path = path.with_extension("json");
    let text = fs::read_to_string(&side_path).map_err(|e| IoError::io(&side_path, e))?;
    let sidecar: SnapshotSidecar =
        serde_json::from_str(&text).map_err(|e| IoError::json(&side_path, e))?;
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    let found = hex_digest(&bytes);
    if found != sidecar.sha256 {
        return Err(IoError::HashMismatch {
            path: path.to_path_buf(),
            expected: sidecar.sha256,
            found,
        });
    }
    if bytes.len() % 8 != 0 {
        return Err(IoError::SchemaMismatch(format!(
            "{} bytes is not a whole number of f64",
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let field = GridField::from_values(sidecar.geometry, values)?;
    let lattice = field.lattice();
    if (lattice.nx, lattice.ny) != (sidecar.nx, sidecar.ny) {
        return Err(IoError::SchemaMismatch(format!(
            "lattice {}x{}, sidecar {}x{}",
            lattice.nx, lattice.ny, sidecar.nx, sidecar.ny
        )));
    }
    Ok(field)
}

/// Hashes of everything written in one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<EmittedFile>,
}

impl Manifest {
    pub fn extend(&mut self, files: impl IntoIterator<Item = EmittedFile>) {
        self.files.extend(files);
    }

    /// `sha256sum`-compatible listing, paths relative to `root`.
    pub fn render(&self, root: &Path) -> String {
        let mut lines: Vec<String> = self
            .files
            .iter()
            .map(|f| {
                let rel = f.path.strip_prefix(root).unwrap_or(&f.path);
                format!("{}  {}", f.sha256, rel.display())
            })
            .collect();
        lines.sort();
        lines.iter().map(|l| format!("{l}\n")).collect()
    }

    /// Writes `root/manifest.sha256`.
    pub fn write(&self, root: &Path) -> Result<EmittedFile, IoError> {
        emit(&root.join("manifest.sha256"), self.render(root).as_bytes())
    }
}
