//! TOML configuration file.
//!
//! ```toml
//! shots = 10
//! prompts_dir = "prompts"
//!
//! [pipeline]
//! mode = "gold-evidence"
//! top_k = 5
//! tie_break = "stable_by_extraction"   # or { seeded_random = 7 }
//!
//! [pipeline.ablation]
//! use_evidence_graph = true
//!
//! [model]
//! endpoint = "http://localhost:8000/v1/completions"
//! model = "some-model"
//! temperature = 0.0
//! max_tokens = 1024
//! ```
//!
//! The model section is overlaid by `FACTGRAPH_ENDPOINT`, `FACTGRAPH_API_KEY`
//! and `FACTGRAPH_MODEL`. The API key is best kept in the environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::prompts::DEFAULT_CONSTRUCTION_SHOTS;
use crate::agents::ModelConfig;
use crate::pipeline::PipelineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub pipeline: PipelineConfig,
    pub model: ModelConfig,
    /// Directory of template overrides (`<name>.txt`, `<name>.examples.txt`).
    pub prompts_dir: Option<PathBuf>,
    /// In-context examples per construction template.
    pub shots: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            pipeline: PipelineConfig::default(),
            model: ModelConfig::default(),
            prompts_dir: None,
            shots: DEFAULT_CONSTRUCTION_SHOTS,
        }
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Relative `prompts_dir` paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        if let (Some(dir), Some(base)) = (&cfg.prompts_dir, path.parent()) {
            if dir.is_relative() {
                cfg.prompts_dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn with_env(mut self) -> Self {
        self.model = self.model.with_env();
        self
    }
}
