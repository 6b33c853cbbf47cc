// SPDX-License-Identifier: Apache-2.0

//! Pipeline configuration file.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` file,
//! environment (`SENTINEL_RPC_URL`), command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sentinel_core::anomaly::FitConfig;
use sentinel_core::bayesnet::StructureConfig;
use sentinel_core::evm::NormalizeConfig;
use sentinel_core::ingest::RpcEndpoint;
use sentinel_core::model::TrainConfig;
use sentinel_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub labels: Option<PathBuf>,
    pub directory: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    /// Benign transactions drawn from each block holding a malicious one.
    pub per_block: usize,
    pub seed: u64,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings { per_block: 2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub ingest: IngestSettings,
    pub normalize: NormalizeConfig,
    pub train: TrainConfig,
    pub structure: StructureConfig,
    pub fit: FitConfig,
    pub rpc: RpcEndpoint,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml(&text)?;
        cfg.check_paths()?;
        Ok(cfg)
    }

    /// Input paths named in the file must exist when a command starts.
    fn check_paths(&self) -> Result<()> {
        for p in [&self.paths.labels, &self.paths.directory].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::InvalidConfig(format!("configured path {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Applies `--seed` to every seeded stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.train.rng_seed = seed;
        self.structure.rng_seed = seed;
        self.fit.rng_seed = seed;
        self.ingest.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.normalize.validate()?;
        self.train.validate()?;
        self.fit.validate()?;
        if self.ingest.per_block == 0 {
            return Err(Error::InvalidConfig("ingest.per_block must be >= 1".into()));
        }
        if self.structure.max_parents == 0 || self.structure.top_k == 0 {
            return Err(Error::InvalidConfig("structure.max_parents and structure.top_k must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = PipelineConfig::default();
        cfg.train.n_trees = 17;
        cfg.train.positive_class_weight = Some(3.5);
        cfg.fit.hidden = Some(6);
        cfg.rpc.url = "http://localhost:8545".into();
        cfg.paths.model = Some("m.json".into());
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_toml(&PipelineConfig::default().to_toml()).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml("[train]\nn_trees = 5\n\n[normalize]\nmax_len = 100\n").unwrap();
        assert_eq!(cfg.train.n_trees, 5);
        assert_eq!(cfg.train.max_depth, TrainConfig::default().max_depth);
        assert_eq!(cfg.normalize.max_len, 100);
        assert_eq!(cfg.normalize.pad_token, "PAD");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(PipelineConfig::from_toml("[train]\ntrees = 5\n"), Err(Error::InvalidConfig(_))));
    }
}
