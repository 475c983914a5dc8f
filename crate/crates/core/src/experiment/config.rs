use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{DetectorSettings, ReplicationPlan, Strategy, SweepAxis};
use crate::simworld::Scenario;
use crate::watermark::SecretKey;

fn default_replicates() -> usize {
    1000
}

fn default_level() -> f64 {
    0.95
}

/// Which metric an experiment produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    /// Detection ROC with the owner key.
    Roc,
    /// ROC with an independently seeded wrong key.
    Anonymity,
    /// Episode-reward comparison of the two arms.
    Reward,
    /// One ROC per value of a scenario parameter.
    Sweep { axis: SweepAxis, values: Vec<f64> },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Roc => "roc",
            ExperimentKind::Anonymity => "anonymity",
            ExperimentKind::Reward => "reward",
            ExperimentKind::Sweep { .. } => "sweep",
        }
    }
}

/// A complete experiment description. Every output file embeds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub strategy: Strategy,
    /// Owner key given inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<SecretKey>,
    /// Owner key read from a key file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_file: Option<PathBuf>,
    /// Replications per arm.
    pub n: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub detector: DetectorSettings,
    pub experiment: ExperimentKind,
    #[serde(default = "default_replicates")]
    pub bootstrap_replicates: usize,
    #[serde(default = "default_level")]
    pub confidence_level: f64,
    /// Where results go; the command line or environment decides when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Parses JSON into `T`, reporting the path of the first offending field.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema { path, message: e.into_inner().to_string() }
    })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    /// Reads and parses a config file, resolving `key_file` next to it and
    /// inlining the key.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(kf) = cfg.key_file.take() {
            if cfg.key.is_some() {
                return Err(Error::config("give either `key` or `key_file`, not both"));
            }
            let kp = path.parent().map_or(kf.clone(), |d| d.join(&kf));
            let text = std::fs::read_to_string(&kp).map_err(|e| Error::io(&kp, e))?;
            cfg.key = Some(SecretKey::from_json(&text)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn key(&self) -> Result<SecretKey> {
        self.key.ok_or_else(|| Error::config("no owner key: set `key` or `key_file`"))
    }

    pub fn plan(&self) -> Result<ReplicationPlan> {
        Ok(ReplicationPlan {
            scenario: self.scenario.clone(),
            strategy: self.strategy,
            key: self.key()?,
            n: self.n,
            master_seed: self.master_seed,
            detector: self.detector.clone(),
            wrong_key: matches!(self.experiment, ExperimentKind::Anonymity),
        })
    }

    /// Semantic checks beyond the schema, run before any simulation.
    pub fn validate(&self) -> Result<()> {
        if self.key.is_some() && self.key_file.is_some() {
            return Err(Error::config("give either `key` or `key_file`, not both"));
        }
        if self.bootstrap_replicates == 0 {
            return Err(Error::config("bootstrap_replicates must be positive"));
        }
        if !(0.0..1.0).contains(&self.confidence_level) {
            return Err(Error::config("confidence_level must lie in [0, 1)"));
        }
        if let ExperimentKind::Sweep { axis, values } = &self.experiment {
            if values.is_empty() {
                return Err(Error::config("sweep needs at least one value"));
            }
            let plan = self.plan()?;
            for &v in values {
                axis.apply(&plan, v)?.validate()?;
            }
        }
        self.plan()?.validate()
    }
}

/// JSON schema of [`ExperimentConfig`].
pub fn config_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(ExperimentConfig)).expect("schema serializes")
}
