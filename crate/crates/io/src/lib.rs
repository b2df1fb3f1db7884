//! Run configuration, deterministic file formats, hashes and golden-file
//! regression for `onephase-core`.

mod config;
mod formats;
mod golden;
mod svg;

pub use config::{output_root, Command, GridParams, RunConfig, OUTPUT_ROOT_VAR};
pub use formats::{
    format_real, profile_header, read_field_snapshot, sha256_file, write_csv, write_curve_csv,
    write_field_snapshot, write_json, write_profile, write_sweep, write_text, write_weiss_csv,
    EmittedFile, Manifest, ProfileHeader, SnapshotSidecar,
};
pub use golden::{
    compare, reference_golden, regression_check, Deviation, GoldenFile, GoldenRecord, Provenance,
    RegressionReport, GOLDEN_SCHEMA,
};
pub use svg::{loglog_svg, polylines_svg};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("golden key {0:?} missing from the produced file")]
    MissingKey(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{path}: sha256 {found} does not match the recorded {expected}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("invalid {field} = {value}: expected {range}")]
    InvalidConfig {
        field: &'static str,
        value: String,
        range: &'static str,
    },
    #[error(transparent)]
    Grid(#[from] onephase_core::GridError),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Self::Json {
            path: path.into(),
            source,
        }
    }
}
