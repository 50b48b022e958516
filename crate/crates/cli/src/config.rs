//! Experiment configuration files and their canonical hash.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use excl_core::stats::ClusterFunctional;
use excl_core::Model;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TailExtract,
    Theta,
    LimitLaw,
    ClusterCompare,
    MetricBench,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TailExtract => "tail-extract",
            ExperimentKind::Theta => "theta",
            ExperimentKind::LimitLaw => "limit-law",
            ExperimentKind::ClusterCompare => "cluster-compare",
            ExperimentKind::MetricBench => "metric-bench",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub model: Model,
    /// Window sides for simulation-based experiments.
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    /// Simulated windows per `tau` (pattern pairs for `metric-bench`).
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Exact tail draws per setting (`theta`, `cluster-compare`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Block side; defaults to `sqrt(tau r(a_tau))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_tau: Option<f64>,
    /// Dimensions swept by `theta`; defaults to the model's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Cluster summaries for `cluster-compare`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionals: Option<Vec<ClusterFunctional>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub dump: bool,
}

fn default_tau() -> Vec<f64> {
    vec![40.0]
}

fn default_replicates() -> usize {
    1000
}

fn default_epsilon() -> f64 {
    1.0
}

/// Invalid configuration, located by the path of the offending field.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
        ConfigError { path: path.into(), message: message.into() }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::at(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.model.validate().map_err(|e| ConfigError::at("model", e.to_string()))?;
        if self.tau.is_empty() {
            return Err(ConfigError::at("tau", "needs at least one window side"));
        }
        for (i, t) in self.tau.iter().enumerate() {
            if !(*t > 0.0 && t.is_finite()) {
                return Err(ConfigError::at(format!("tau[{i}]"), format!("must be positive and finite, got {t}")));
            }
        }
        if self.replicates == 0 {
            return Err(ConfigError::at("replicates", "must be at least 1"));
        }
        if self.samples == Some(0) {
            return Err(ConfigError::at("samples", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::at("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if let Some(b) = self.b_tau {
            if !(b > 0.0 && b.is_finite()) {
                return Err(ConfigError::at("b_tau", format!("must be positive, got {b}")));
            }
            if let Some(i) = self.tau.iter().position(|t| b > *t) {
                return Err(ConfigError::at("b_tau", format!("exceeds tau[{i}] = {}", self.tau[i])));
            }
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() {
                return Err(ConfigError::at("dims", "needs at least one dimension"));
            }
            if let Some(i) = dims.iter().position(|d| *d == 0) {
                return Err(ConfigError::at(format!("dims[{i}]"), "must be at least 1"));
            }
        }
        if let Some(fs) = &self.functionals {
            for (i, f) in fs.iter().enumerate() {
                let bad = match f {
                    ClusterFunctional::CountAbove { level } | ClusterFunctional::Diameter { level } => !(*level >= 0.0),
                    ClusterFunctional::DistanceToReference { references, score_floor } => {
                        *references == 0 || !(*score_floor >= 0.0)
                    }
                };
                if bad {
                    return Err(ConfigError::at(format!("functionals[{i}]"), "invalid parameters"));
                }
            }
        }
        if self.threads == Some(0) {
            return Err(ConfigError::at("threads", "must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (sorted keys), leaving out fields
    /// that do not change results: output directory, thread count, dumps.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            for key in ["out", "threads", "dump"] {
                obj.remove(key);
            }
        }
        let canonical = serde_json::to_string(&value).expect("value serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
