use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::encoding::{AttentionMode, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::neural::{EncoderConfig, TrainConfig};

/// Overrides `seed` of a loaded configuration.
pub const SEED_ENV: &str = "TABNER_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugMode {
    #[default]
    None,
    Lwtr,
    Rdltab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub valid_fraction: f64,
    pub aug_mode: AugMode,
    pub n_samples: usize,
    pub attention_mode: AttentionMode,
    pub train: TrainConfig,
    pub encoder: EncoderConfig,
    pub augment: AugmentConfig,
    pub corpus: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// Select learning rate and batch size on the first fold.
    pub grid_search: bool,
    pub vocab_min_count: usize,
    pub max_len: usize,
    pub save_models: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            folds: 5,
            valid_fraction: 0.10,
            aug_mode: AugMode::None,
            n_samples: 1,
            attention_mode: AttentionMode::TableMask,
            train: TrainConfig::default(),
            encoder: EncoderConfig::default(),
            augment: AugmentConfig::default(),
            corpus: None,
            triples: None,
            output_dir: None,
            seed: 0,
            grid_search: true,
            vocab_min_count: 1,
            max_len: DEFAULT_MAX_LEN,
            save_models: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if !(self.valid_fraction > 0.0 && self.valid_fraction < 1.0) {
            return Err(Error::Config("valid_fraction must lie in (0, 1)".into()));
        }
        if !(1..=2).contains(&self.n_samples) {
            return Err(Error::Config("n_samples must be 1 or 2".into()));
        }
        if self.grid_search && (self.train.lr_grid.is_empty() || self.train.batch_grid.is_empty()) {
            return Err(Error::Config("grid search needs non-empty lr_grid and batch_grid".into()));
        }
        self.train.validate()?;
        self.encoder.validate()?;
        self.augment.validate()
    }

    /// Reads a JSON config; `TABNER_SEED` overrides the seed when set.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&s).map_err(|e| {
            Error::parse(
                format!("{}:{}:{}", path.display(), e.line(), e.column()),
                e.to_string(),
            )
        })?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.seed = seed
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={seed:?} is not an unsigned integer")))?;
        }
        Ok(cfg)
    }
}
