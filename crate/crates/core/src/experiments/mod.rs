//! Seeded harnesses: the worked examples, the attribution-consistency
//! benchmark and three synthetic case studies.

mod consistency;
mod credit;
mod donation;
mod examples;
pub mod generators;
mod targeting;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{
    train_logistic, LogisticConfig, ScoringFunction, Standardization, TrainReport,
};

pub use consistency::{
    bench_consistency, ConsistencyConfig, QuantileSummary, TargetingModelConfig, DEFAULT_QUANTILES,
};
pub use credit::{credit_study, CreditConfig};
pub use donation::{donation_study, DonationConfig};
pub use examples::repro_examples;
pub use targeting::{targeting_study, TargetingStudyConfig};

/// A named pass/fail assertion of a harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Tabular output of a harness plus its checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub experiment: String,
    pub seed: u64,
    /// The exact configuration the rows were produced with.
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub checks: Vec<Check>,
    pub summary: Value,
}

impl BenchResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Errors with the first failing check.
    pub fn ensure_passed(&self) -> Result<()> {
        match self.failures().next() {
            Some(c) => Err(Error::Check {
                metric: c.name.clone(),
                detail: c.detail.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = csv::Writer::from_writer(Vec::new());
        let csv_err = |source| Error::Csv {
            path: "<memory>".into(),
            source,
        };
        out.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record(row.iter().map(render_cell))
                .map_err(csv_err)?;
        }
        let bytes = out
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv buffer: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_file(path, &(self.to_json()? + "\n"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv()?)
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Cell text: strings bare, null empty, everything else as JSON.
pub fn render_cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    NonIncreasing,
    NonDecreasing,
}

/// Whether `values` follow `trend`, allowing at most one step against it
/// whose size is under 5% of the earlier value.
pub fn trend_holds(values: &[f64], trend: Trend) -> bool {
    let mut inversions = 0;
    for pair in values.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let against = match trend {
            Trend::NonIncreasing => b - a,
            Trend::NonDecreasing => a - b,
        };
        if against > 0.0 {
            let relative = against / a.abs().max(f64::MIN_POSITIVE);
            if relative >= 0.05 {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

/// Derives an independent stream seed from a base seed and an index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which synthetic case study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStudy {
    Credit,
    Targeting,
    Donation,
}

/// Runs a case study with its default configuration.
pub fn run_case_study(study: CaseStudy, seed: u64) -> Result<BenchResult> {
    match study {
        CaseStudy::Credit => credit_study(&CreditConfig::default(), seed),
        CaseStudy::Targeting => targeting_study(&TargetingStudyConfig::default(), seed),
        CaseStudy::Donation => donation_study(&DonationConfig::default(), seed),
    }
}

/// Fits a logistic model on z-scored features and returns it in raw units.
pub(crate) fn train_standardized_logistic(
    train: &Dataset,
    l2: f64,
) -> Result<(ScoringFunction, TrainReport)> {
    let scaling = Standardization::fit(train);
    let (model, report) = train_logistic(&scaling.apply(train)?, l2, &LogisticConfig::default())?;
    let (weights, intercept) = model
        .linear_parts()
        .ok_or_else(|| Error::Model("logistic fit returned a non-linear model".into()))?;
    let (weights, intercept) = scaling.fold(weights, intercept);
    Ok((ScoringFunction::logistic(weights, intercept), report))
}

/// Retries `attempt` with seeds `seed, seed + 1, ...` while it reports
/// degenerate data, up to five attempts.
pub(crate) fn with_regeneration<T>(
    seed: u64,
    mut attempt: impl FnMut(u64) -> Result<T>,
) -> Result<(T, u64)> {
    const ATTEMPTS: usize = 5;
    let mut last = String::new();
    for i in 0..ATTEMPTS as u64 {
        let s = seed.wrapping_add(i);
        match attempt(s) {
            Ok(v) => return Ok((v, s)),
            Err(Error::SingleClassTarget(_)) => last = "single-class target".into(),
            Err(Error::Empty(reason)) => last = reason,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate {
        attempts: ATTEMPTS,
        reason: last,
    })
}
