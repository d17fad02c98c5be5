//! Serialized experiment results.

use clap::ValueEnum;
use nagc::{Hyperparams, LossBreakdown};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Nagc,
    /// NAGC with `rho` forced to 0.5, i.e. no positive-unlabeled weighting.
    NagcNopu,
    Snmf,
    Nmf,
    Kmeans,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nagc => "nagc",
            Method::NagcNopu => "nagc-nopu",
            Method::Snmf => "snmf",
            Method::Nmf => "nmf",
            Method::Kmeans => "kmeans",
        }
    }

    /// Hyperparameters as the method actually runs them.
    pub fn effective(self, hp: &Hyperparams) -> Hyperparams {
        let mut hp = hp.clone();
        if self == Method::NagcNopu {
            hp.rho = 0.5;
        }
        hp
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One run of one method on one dataset.
///
/// `ari` is present iff the dataset has ground-truth labels; `modularity`
/// and `avg_entropy` are always computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub dataset: String,
    pub method: Method,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub trace: Vec<LossBreakdown>,
    pub labels: Vec<usize>,
    pub ari: Option<f64>,
    pub modularity: Option<f64>,
    pub avg_entropy: Option<f64>,
    pub wall_time_seconds: f64,
}

impl RunRecord {
    /// Check the record invariants beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Input(format!("invalid run record: {msg}")));
        if self.trace.len() != self.hyperparams.iters {
            return bad(format!(
                "trace has {} entries for {} iterations",
                self.trace.len(),
                self.hyperparams.iters
            ));
        }
        if self.seed != self.hyperparams.seed {
            return bad("seed differs from hyperparams.seed".into());
        }
        if self.labels.is_empty() {
            return bad("no labels".into());
        }
        if let Some(k) = self.labels.iter().find(|&&l| l >= self.hyperparams.k1) {
            return bad(format!("label {k} out of range for k1 = {}", self.hyperparams.k1));
        }
        if self.trace.iter().any(|lb| !lb.is_finite()) {
            return bad("non-finite loss".into());
        }
        if let Some(a) = self.ari {
            if !(-1.0..=1.0 + 1e-12).contains(&a) {
                return bad(format!("ari {a} out of range"));
            }
        }
        if let Some(q) = self.modularity {
            if !(-0.5 - 1e-12..=1.0 + 1e-12).contains(&q) {
                return bad(format!("modularity {q} out of range"));
            }
        }
        if let Some(h) = self.avg_entropy {
            if !(0.0..=1.0 + 1e-12).contains(&h) {
                return bad(format!("average entropy {h} out of range"));
            }
        }
        if self.wall_time_seconds.is_nan() || self.wall_time_seconds < 0.0 {
            return bad("negative wall time".into());
        }
        Ok(())
    }

    /// Parse and validate one JSON record.
    pub fn from_json(text: &str) -> Result<RunRecord, HarnessError> {
        let record: RunRecord = serde_json::from_str(text)?;
        record.validate()?;
        Ok(record)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Stat { mean, std: var.sqrt() })
    }

    fn of_present(values: impl Iterator<Item = Option<f64>>) -> Option<Stat> {
        let v: Option<Vec<f64>> = values.collect();
        v.and_then(|v| Stat::of(&v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub dataset: String,
    pub method: Method,
    pub hyperparams: Hyperparams,
    pub restarts: usize,
    pub ari: Option<Stat>,
    pub modularity: Option<Stat>,
    pub avg_entropy: Option<Stat>,
    pub wall_time_seconds: Stat,
}

impl RestartSummary {
    pub fn from_records(records: &[RunRecord]) -> Option<RestartSummary> {
        let first = records.first()?;
        let wall: Vec<f64> = records.iter().map(|r| r.wall_time_seconds).collect();
        Some(RestartSummary {
            dataset: first.dataset.clone(),
            method: first.method,
            hyperparams: first.hyperparams.clone(),
            restarts: records.len(),
            ari: Stat::of_present(records.iter().map(|r| r.ari)),
            modularity: Stat::of_present(records.iter().map(|r| r.modularity)),
            avg_entropy: Stat::of_present(records.iter().map(|r| r.avg_entropy)),
            wall_time_seconds: Stat::of(&wall)?,
        })
    }
}
