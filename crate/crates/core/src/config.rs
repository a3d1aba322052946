//! Run configuration files.
//!
//! A TOML file with one table per stage. Command-line flags override file
//! values; every run writes the fully resolved configuration next to its
//! outputs.
//!
//! ```toml
//! seed = 7
//! workers = 1
//! preset = "large"
//!
//! [train]
//! budget = 500000
//! batch_size = 128
//!
//! [train.sampling]
//! n_min = 10
//! n_max = 1000
//! noise_max = 1.0
//!
//! [eval]
//! count = 10000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::{EvalConfig, TrainConfig};

/// Parameters of the `simulate` stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Model name or `seg:<first>:<second>:<fraction_first>`.
    pub model: String,
    pub alpha: f64,
    pub n: usize,
    pub dim: usize,
    pub count: usize,
    pub noise: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: "fbm".to_string(),
            alpha: 0.5,
            n: 100,
            dim: 3,
            count: 10,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; overrides the per-stage seeds when set.
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Architecture preset used by `train`.
    pub preset: String,
    pub simulate: SimulateConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            workers: None,
            preset: "large".to_string(),
            simulate: SimulateConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Mismatch(format!("invalid configuration: {}", e.message())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Model;

    #[test]
    fn doc_example_parses() {
        let text = r#"
seed = 7
preset = "small"

[train]
budget = 1000
batch_size = 16

[train.sampling]
n_max = 200
noise_max = 1.0
models = ["fbm", "sbm"]
alpha_ranges = [["fbm", 0.5, 1.5]]
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.train.budget, 1000);
        assert_eq!(cfg.train.sampling.n_max, 200);
        assert_eq!(cfg.train.sampling.alpha_range(Model::Fbm), (0.5, 1.5));
        assert_eq!(cfg.eval.count, EvalConfig::default().count);
    }

    #[test]
    fn round_trip_and_unknown_keys() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(RunConfig::from_toml("[train]\nbudgett = 3\n").is_err());
    }
}
