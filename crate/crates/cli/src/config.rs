//! TOML configuration for the `pipeline` subcommand.

use std::path::{Path, PathBuf};

use farm_core::align::AlignConfig;
use farm_core::gnn::GnnConfig;
use farm_core::kge::KgeConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { corpus: PathBuf::from("corpus.smi"), out_dir: PathBuf::from("farm_out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Overrides every stage seed when set.
    pub seed: Option<u64>,
    pub strict_valence: bool,
    pub max_failure_ratio: f64,
    pub log_level: Option<String>,
    /// Vocabulary threshold for the vocab file and the encoder.
    pub min_frequency: u64,
    pub paths: Paths,
    pub kge: KgeConfig,
    pub gnn: GnnConfig,
    pub align: AlignConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            strict_valence: false,
            max_failure_ratio: 0.1,
            log_level: None,
            min_frequency: 1,
            paths: Paths::default(),
            kge: KgeConfig::default(),
            gnn: GnnConfig::default(),
            align: AlignConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses `text`; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<PipelineConfig> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        for p in [&mut cfg.paths.corpus, &mut cfg.paths.out_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        PipelineConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies `seed` to every stochastic stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.kge.seed = seed;
        self.gnn.seed = seed;
        self.align.seed = seed;
        self
    }
}
