//! Strict JSON run configuration.

use std::path::{Path, PathBuf};

use onephase_core::SymmetrySplit;
use serde::{Deserialize, Serialize};

use crate::IoError;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "ONEPHASE_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Cone,
    Spectrum,
    Table,
    Solve,
    Sweep,
    Diagnose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub radius: f64,
    pub h: f64,
    pub max_sweeps: usize,
    pub energy_tol: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            h: 1.0 / 128.0,
            max_sweeps: 400,
            energy_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub dims: Vec<usize>,
    pub splits: Vec<SymmetrySplit>,
    /// Elements of the eigenvalue discretization.
    pub n: usize,
    pub grid: GridParams,
    /// Certification tolerance of the free-boundary angle.
    pub shoot_tol: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            dims: vec![7],
            splits: Vec::new(),
            n: 4096,
            grid: GridParams::default(),
            shoot_tol: 1e-10,
            output_dir: PathBuf::from("out"),
            seed: 0x5eed,
        }
    }

    /// Checks every numeric parameter against its documented range.
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |field, value: String, range| {
            Err(IoError::InvalidConfig {
                field,
                value,
                range,
            })
        };
        if let Some(d) = self.dims.iter().find(|d| !(2..=64).contains(*d)) {
            return bad("dims", d.to_string(), "2..=64");
        }
        for s in &self.splits {
            if s.m == 0 || s.k == 0 || s.m + s.k > 64 {
                return bad("splits", s.to_string(), "m, k >= 1 and m + k <= 64");
            }
        }
        if !(16..=1 << 20).contains(&self.n) {
            return bad("n", self.n.to_string(), "16..=1048576");
        }
        let g = &self.grid;
        if !(g.radius > 0.0 && g.radius.is_finite()) {
            return bad("grid.radius", g.radius.to_string(), "a positive length");
        }
        if !(g.h > 0.0 && g.h <= g.radius / 4.0) {
            return bad("grid.h", g.h.to_string(), "(0, radius / 4]");
        }
        if g.max_sweeps == 0 {
            return bad("grid.max_sweeps", "0".into(), ">= 1");
        }
        if !(g.energy_tol > 0.0 && g.energy_tol < 1.0) {
            return bad("grid.energy_tol", g.energy_tol.to_string(), "(0, 1)");
        }
        if !(self.shoot_tol > 0.0 && self.shoot_tol < 1e-3) {
            return bad("shoot_tol", self.shoot_tol.to_string(), "(0, 1e-3)");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses and validates; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| IoError::json("<config>", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| IoError::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Output root: the explicit choice, else `$ONEPHASE_OUT`, else `out`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("out"),
    }
}
