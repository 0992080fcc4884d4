//! Run configuration: one TOML document with a section per stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::AlignConfig;
use crate::ingest::Split;
use crate::llm::ProviderConfig;
use crate::model::ContextType;
use crate::qagen::{KindSelection, NuStyle};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub thresholds: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        }
    }
}

/// Which ADs supply CIDEr document frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfScope {
    /// Every AD of the analysed pair plus `corpus_tracks`.
    #[default]
    Dataset,
    /// Only the analysed pair.
    Movie,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub idf: IdfScope,
    /// Other tracks of the dataset, used when `idf = "dataset"`.
    pub corpus_tracks: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaConfig {
    pub kinds: KindSelection,
    pub nu_style: NuStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnswerConfig {
    pub context: ContextType,
}

impl Default for AnswerConfig {
    fn default() -> Self {
        Self {
            context: ContextType::DialogPlusAd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub port: u16,
    pub token_file: Option<PathBuf>,
    /// Submission journal (JSONL).
    pub store_path: PathBuf,
    pub rate_limit: usize,
    pub window_hours: i64,
    /// Dataset id to question-store directory.
    pub datasets: BTreeMap<String, PathBuf>,
    pub split: Split,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            token_file: None,
            store_path: PathBuf::from("adqa-journal.jsonl"),
            rate_limit: 3,
            window_hours: 24,
            datasets: BTreeMap::new(),
            split: Split::Private,
        }
    }
}

impl ServiceConfig {
    /// Applies `ADQA_PORT`, `ADQA_TOKEN_FILE`, `ADQA_STORE_PATH` and
    /// `ADQA_RATE_LIMIT` when set.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get("ADQA_PORT") {
            self.port = v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("ADQA_PORT={v:?} is not a port")))?;
        }
        if let Some(v) = get("ADQA_TOKEN_FILE") {
            self.token_file = Some(PathBuf::from(v));
        }
        if let Some(v) = get("ADQA_STORE_PATH") {
            self.store_path = PathBuf::from(v);
        }
        if let Some(v) = get("ADQA_RATE_LIMIT") {
            self.rate_limit = v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("ADQA_RATE_LIMIT={v:?} is not a count")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub provider: ProviderConfig,
    pub align: AlignConfig,
    pub sweep: SweepConfig,
    pub similarity: SimilarityConfig,
    pub qa: QaConfig,
    pub answer: AnswerConfig,
    pub service: ServiceConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        self.provider.check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let a = &self.align;
        if !(a.threshold > 0.0 && a.threshold <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "align.threshold {} outside (0, 1]",
                a.threshold
            )));
        }
        if a.batch_size == 0 || a.min_anchors < 2 || a.buffer_s < 0.0 {
            return Err(ConfigError::Invalid(
                "align.batch_size must be >= 1, align.min_anchors >= 2 and align.buffer_s >= 0".into(),
            ));
        }
        if self.service.rate_limit == 0 || self.service.window_hours <= 0 {
            return Err(ConfigError::Invalid(
                "service.rate_limit and service.window_hours must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// sha256 of the canonical TOML rendering.
    pub fn digest(&self) -> String {
        crate::llm::sha256_hex(&self.to_toml())
    }
}
