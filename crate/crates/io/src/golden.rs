//! Golden records and per-key regression.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use crate::IoError;

pub const GOLDEN_SCHEMA: &str = "onephase-golden/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Published reference value, carried verbatim.
    PublishedTable,
    /// Produced by an independent high-precision oracle.
    DerivedOracle,
    /// Known in closed form.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenRecord {
    pub key: String,
    /// Ambient dimension the record belongs to.
    pub d: usize,
    pub value: f64,
    pub provenance: Provenance,
    /// Absolute tolerance.
    pub tolerance: f64,
    pub anchor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenFile {
    pub schema: String,
    pub records: Vec<GoldenRecord>,
}

impl GoldenFile {
    pub fn new(records: Vec<GoldenRecord>) -> Self {
        Self {
            schema: GOLDEN_SCHEMA.to_string(),
            records,
        }
    }

    pub fn get(&self, key: &str) -> Option<&GoldenRecord> {
        self.records.iter().find(|r| r.key == key)
    }

    /// Records whose dimension lies in `lo..=hi`.
    pub fn restricted(&self, lo: usize, hi: usize) -> Self {
        Self {
            schema: self.schema.clone(),
            records: self
                .records
                .iter()
                .filter(|r| (lo..=hi).contains(&r.d))
                .cloned()
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            IoError::Json { source, .. } => IoError::json(path, source),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let file: Self = serde_json::from_str(text).map_err(|e| match e.classify() {
            Category::Data => IoError::SchemaMismatch(e.to_string()),
            _ => IoError::json("<golden>", e),
        })?;
        if file.schema != GOLDEN_SCHEMA {
            return Err(IoError::SchemaMismatch(format!(
                "schema {:?}, expected {GOLDEN_SCHEMA:?}",
                file.schema
            )));
        }
        let mut seen = BTreeSet::new();
        for r in &file.records {
            if !seen.insert(r.key.as_str()) {
                return Err(IoError::SchemaMismatch(format!(
                    "duplicate key {:?}",
                    r.key
                )));
            }
            if r.tolerance.is_nan() || r.tolerance < 0.0 {
                return Err(IoError::SchemaMismatch(format!(
                    "negative tolerance on {:?}",
                    r.key
                )));
            }
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("golden serializes");
        s.push('\n');
        s
    }
}

const LAMBDA: [f64; 8] = [5.70, 6.70, 7.70, 8.70, 9.70, 10.70, 11.70, 12.70];
const GAMMA: [f64; 8] = [
    1.7573, 1.4839, 1.3672, 1.2985, 1.2523, 1.2189, 1.1934, 1.1734,
];
/// Free-boundary angle and mean curvature of the `(1, d - 1)` cones.
const ORACLE_CONES: [(f64, f64); 8] = [
    (1.027067634812298, 3.0225473540555363),
    (1.0688210180003985, 3.2932205792561104),
    (1.1022212947806775, 3.5432217871834455),
    (1.1297293680952436, 3.7766769293608546),
    (1.1528970926431465, 3.996496699783478),
    (1.172758171984152, 4.2048259925647935),
    (1.190031382628485, 4.403299656956205),
    (1.2052341290236515, 4.593197823925691),
];
const ORACLE_WEISS_D7: f64 = 3.8309496284604143;

/// Reference records for `d = 7..=14`.
pub fn reference_golden() -> GoldenFile {
    let mut records = Vec::new();
    for (i, d) in (7..=14).enumerate() {
        let tag = format!("d{d}");
        let cone = format!("d{d}_m1_k{}", d - 1);
        records.push(GoldenRecord {
            key: format!("lambda.{tag}"),
            d,
            value: LAMBDA[i],
            provenance: Provenance::PublishedTable,
            tolerance: 0.02,
            anchor: format!("principal eigenvalue table, d = {d}"),
        });
        records.push(GoldenRecord {
            key: format!("gamma.{tag}"),
            d,
            value: GAMMA[i],
            provenance: Provenance::PublishedTable,
            tolerance: 5e-3,
            anchor: format!("homogeneity exponent table, d = {d}"),
        });
        records.push(GoldenRecord {
            key: format!("theta_fb.{cone}"),
            d,
            value: ORACLE_CONES[i].0,
            provenance: Provenance::DerivedOracle,
            tolerance: 1e-8,
            anchor: "independent mpmath shooting".into(),
        });
        records.push(GoldenRecord {
            key: format!("mean_curvature.{cone}"),
            d,
            value: ORACLE_CONES[i].1,
            provenance: Provenance::DerivedOracle,
            tolerance: 1e-7,
            anchor: "independent mpmath shooting".into(),
        });
        records.push(GoldenRecord {
            key: format!("lambda_flat.{tag}"),
            d,
            value: 0.0,
            provenance: Provenance::Trivial,
            tolerance: 1e-8,
            anchor: "half-space solution has constant Jacobi field".into(),
        });
    }
    records.push(GoldenRecord {
        key: "weiss_density.d7_m1_k6".into(),
        d: 7,
        value: ORACLE_WEISS_D7,
        provenance: Provenance::DerivedOracle,
        tolerance: 1e-6,
        anchor: "mpmath quadrature of the section integrals".into(),
    });
    GoldenFile::new(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub key: String,
    pub provenance: Provenance,
    pub expected: f64,
    pub produced: f64,
    pub absolute: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub deviations: Vec<Deviation>,
    pub max_relative: f64,
}

impl RegressionReport {
    pub fn passed(&self) -> bool {
        self.deviations.iter().all(|d| d.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Deviation> {
        self.deviations.iter().filter(|d| !d.pass)
    }

    /// One line per failing key.
    pub fn diff(&self) -> String {
        let mut out = String::new();
        for d in self.failures() {
            out.push_str(&format!(
                "{}: expected {} produced {} (|diff| {:.3e} > tol {:.1e}, {:?})\n",
                d.key, d.expected, d.produced, d.absolute, d.tolerance, d.provenance
            ));
        }
        out
    }
}

/// Compares every golden key against `produced` using the golden tolerance.
pub fn compare(golden: &GoldenFile, produced: &GoldenFile) -> Result<RegressionReport, IoError> {
    let mut deviations = Vec::with_capacity(golden.records.len());
    let mut max_relative = 0.0f64;
    for g in &golden.records {
        let p = produced
            .get(&g.key)
            .ok_or_else(|| IoError::MissingKey(g.key.clone()))?;
        let absolute = (p.value - g.value).abs();
        let relative = if g.value != 0.0 {
            absolute / g.value.abs()
        } else {
            absolute
        };
        max_relative = max_relative.max(relative);
        deviations.push(Deviation {
            key: g.key.clone(),
            provenance: g.provenance,
            expected: g.value,
            produced: p.value,
            absolute,
            relative,
            tolerance: g.tolerance,
            pass: absolute <= g.tolerance,
        });
    }
    Ok(RegressionReport {
        deviations,
        max_relative,
    })
}

pub fn regression_check(golden: &Path, produced: &Path) -> Result<RegressionReport, IoError> {
    compare(&GoldenFile::load(golden)?, &GoldenFile::load(produced)?)
}
