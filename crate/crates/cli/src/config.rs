//! The `--config` file: one TOML tree, every key optional. Command-line
//! flags override file values, which override built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use snomed_kg::dataset::HttpBackendConfig;
use snomed_kg::fusion::Strategy;
use snomed_kg::snowstorm::ServerConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub graph: GraphConfig,
    pub search: SearchConfig,
    pub dataset: DatasetConfig,
    pub fusion: FusionSection,
    pub eval: EvalConfig,
    pub server: ServerConfig,
    pub fetch: FetchConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub release: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub diagnoses: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub expert_tags: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub flush_threshold: usize,
    pub shards: usize,
    pub workers: usize,
    /// Retries after the first attempt of a failed batch.
    pub retries: u32,
    pub dedup: bool,
    /// Threads for release parsing.
    pub parse_workers: usize,
}

impl PathsConfig {
    /// Makes relative paths relative to `base` (the config file's directory).
    fn resolve_against(&mut self, base: &Path) {
        let p = self;
        for slot in [
            &mut p.release,
            &mut p.store,
            &mut p.out,
            &mut p.aliases,
            &mut p.pairs,
            &mut p.diagnoses,
            &mut p.records,
            &mut p.expert_tags,
            &mut p.templates,
        ] {
            if let Some(path) = slot.as_mut().filter(|p| p.is_relative()) {
                *path = base.join(&*path);
            }
        }
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { flush_threshold: 1000, shards: 1, workers: 1, retries: 2, dedup: true, parse_workers: 4 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub max_depth: usize,
    pub max_paths: usize,
    pub render: String,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { max_depth: 4, max_paths: 3, render: "with-relations".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub schema: String,
    pub backend: String,
    pub knowledge: bool,
    pub concurrency: usize,
    pub http: HttpBackendConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            schema: "platypus".into(),
            backend: "mock".into(),
            knowledge: true,
            concurrency: 4,
            http: HttpBackendConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    pub strategy: Strategy,
    pub w_moe: f64,
    pub w_esft: f64,
    pub sweep_step: f64,
    pub threshold: f64,
    pub metric: String,
}

impl Default for FusionSection {
    fn default() -> Self {
        FusionSection { strategy: Strategy::Weighted, w_moe: 0.6, w_esft: 0.4, sweep_step: 0.1, threshold: 0.5, metric: "gate".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub field: String,
    pub reference_field: Option<String>,
    pub lowercase: bool,
    pub detach_punctuation: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { field: "output".into(), reference_field: None, lowercase: false, detach_punctuation: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub concurrency: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig { concurrency: 4 }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(PipelineConfig::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            config.paths.resolve_against(base);
        }
        Ok(config)
    }

    /// Range checks on values after flags have been applied.
    pub fn check(&self) -> Result<(), CliError> {
        let g = &self.graph;
        for (name, v) in [("flush_threshold", g.flush_threshold), ("shards", g.shards), ("workers", g.workers), ("parse_workers", g.parse_workers)] {
            if v == 0 {
                return Err(CliError::usage(format!("graph.{name} must be at least 1")));
            }
        }
        if g.retries > 10 {
            return Err(CliError::usage("graph.retries must be at most 10"));
        }
        if self.search.max_depth == 0 || self.search.max_paths == 0 {
            return Err(CliError::usage("search.max_depth and search.max_paths must be at least 1"));
        }
        if self.dataset.concurrency == 0 || self.fetch.concurrency == 0 {
            return Err(CliError::usage("concurrency must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.fusion.threshold) {
            return Err(CliError::usage("fusion.threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A path from a flag, else from the config, else a usage error naming both.
pub fn require(flag: Option<PathBuf>, config: &Option<PathBuf>, flag_name: &str, key: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| CliError::usage(format!("missing --{flag_name} (or paths.{key} in the config file)")))
}
