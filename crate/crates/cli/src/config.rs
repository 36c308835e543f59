//! Pipeline configuration file (TOML).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use debatenet::assort::{PprParams, WalkDirection};
use debatenet::ingest::{CorpusFilter, KeywordScope, ParseMode, QuotePolicy};
use debatenet::layout::{LayoutParams, RepulsionMode, WeightInfluence};
use debatenet::record::parse_timestamp;

use crate::Failure;

pub const WORKSPACE_ENV: &str = "DEBATENET_WORKSPACE";

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsSection,
    pub filter: FilterSection,
    #[serde(default)]
    pub fallback_filter: Option<FilterSection>,
    #[serde(default)]
    pub parse: ParseSection,
    #[serde(default)]
    pub layout: LayoutSection,
    #[serde(default)]
    pub assort: AssortSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub archive: PathBuf,
    pub seeds: PathBuf,
    #[serde(default)]
    pub boundaries: Option<PathBuf>,
    #[serde(default)]
    pub fallback_boundaries: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub window_start: String,
    pub window_end: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default = "default_scope")]
    pub apply_keywords_to: KeywordScope,
}

fn default_scope() -> KeywordScope {
    KeywordScope::RootsOnly
}

impl FilterSection {
    pub fn to_filter(&self) -> anyhow::Result<CorpusFilter> {
        let window_start = parse_timestamp(&self.window_start)
            .ok_or_else(|| anyhow!("filter.window_start: unparseable timestamp {:?}", self.window_start))?;
        let window_end = parse_timestamp(&self.window_end)
            .ok_or_else(|| anyhow!("filter.window_end: unparseable timestamp {:?}", self.window_end))?;
        let filter = CorpusFilter {
            window_start,
            window_end,
            keywords: self.keywords.iter().map(|k| k.to_lowercase()).collect(),
            apply_keywords_to: self.apply_keywords_to,
        };
        filter.validate().map_err(|e| anyhow!("filter: {e}"))?;
        Ok(filter)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParseSection {
    #[serde(default = "default_parse_mode")]
    pub mode: ParseMode,
    #[serde(default)]
    pub quote_policy: QuotePolicy,
}

fn default_parse_mode() -> ParseMode {
    ParseMode::Lenient
}

impl Default for ParseSection {
    fn default() -> Self {
        ParseSection {
            mode: ParseMode::Lenient,
            quote_policy: QuotePolicy::Retweet,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    pub repulsion: f64,
    pub gravity: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub lin_log: bool,
    pub weight_influence: WeightInfluence,
    pub repulsion_mode: RepulsionMode,
    pub theta: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for LayoutSection {
    fn default() -> Self {
        let p = LayoutParams::default();
        LayoutSection {
            repulsion: p.repulsion,
            gravity: p.gravity,
            iterations: p.iterations,
            tolerance: p.tolerance,
            lin_log: p.lin_log,
            weight_influence: p.weight_influence,
            repulsion_mode: p.repulsion_mode,
            theta: p.theta,
            seed: 42,
            threads: 1,
        }
    }
}

impl LayoutSection {
    pub fn to_params(&self) -> LayoutParams {
        LayoutParams {
            repulsion: self.repulsion,
            gravity: self.gravity,
            iterations: self.iterations,
            tolerance: self.tolerance,
            lin_log: self.lin_log,
            weight_influence: self.weight_influence,
            repulsion_mode: self.repulsion_mode,
            theta: self.theta,
            barnes_hut_threshold: LayoutParams::default().barnes_hut_threshold,
            threads: self.threads,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssortSection {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub direction: WalkDirection,
    pub histogram_bins: usize,
}

impl Default for AssortSection {
    fn default() -> Self {
        AssortSection {
            damping: 0.85,
            tolerance: 1e-8,
            max_iterations: 20_000,
            direction: WalkDirection::Undirected,
            histogram_bins: 40,
        }
    }
}

impl AssortSection {
    pub fn to_params(&self) -> PprParams {
        PprParams {
            alpha: self.damping,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            direction: self.direction,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .map_err(Failure::Usage)?;
        let config: PipelineConfig = toml::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
            .map_err(Failure::Usage)?;
        Ok(config)
    }

    /// Output directory: config value, else the workspace environment
    /// variable.
    pub fn output_dir(&self) -> Result<PathBuf, Failure> {
        if let Some(dir) = &self.paths.output_dir {
            return Ok(dir.clone());
        }
        if let Ok(dir) = std::env::var(WORKSPACE_ENV) {
            if !dir.is_empty() {
                return Ok(PathBuf::from(dir));
            }
        }
        Err(Failure::Usage(anyhow!(
            "no output directory: set paths.output_dir in the config or the {WORKSPACE_ENV} environment variable"
        )))
    }
}
