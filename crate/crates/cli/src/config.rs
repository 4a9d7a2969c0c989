//! Layered configuration: built-in defaults or a preset, then the TOML file,
//! then command-line flags.
//!
//! ```toml
//! preset = "parseme"
//!
//! [pipeline]
//! max_gap = 2
//!
//! [train]
//! epochs = 10
//! learning_rate = 0.1
//!
//! [train.dims]
//! d = 32
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use glossmwe::par::Execution;
use glossmwe::pipeline::PipelineConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub pipeline: toml::Table,
    #[serde(default)]
    pub train: toml::Table,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Overlays `over` onto the serialized form of `base`. Nested tables merge
/// key by key; unknown keys are rejected by `T`'s deserializer.
pub fn layer<T: Serialize + DeserializeOwned>(base: &T, over: &toml::Table) -> Result<T> {
    let mut table = toml::Table::try_from(base).context("serializing defaults")?;
    merge(&mut table, over);
    table
        .try_into()
        .map_err(|e: toml::de::Error| InputError(format!("config: {e}")).into())
}

fn merge(into: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (into.get_mut(k), v) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            _ => {
                into.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Flags shared by every command that runs candidate detection.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting configuration: rule-based, parseme or dimsum.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub max_gap: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ordered_only: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub gap_filter: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub verbal_only: Option<bool>,
    /// Add the consecutive-noun compound detector.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub noun_compounds: Option<bool>,
    /// Score candidates and drop those the scorer rejects. Needs --weights.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub encoder_filter: Option<bool>,
    #[arg(long)]
    pub max_candidates_per_entry: Option<usize>,
}

impl PipelineArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<PipelineConfig> {
        let name = self
            .preset
            .as_deref()
            .or(file.preset.as_deref())
            .unwrap_or("rule-based");
        let preset = PipelineConfig::preset(name).map_err(|e| InputError(e.to_string()))?;
        let mut c = layer(&preset, &file.pipeline)?;
        if let Some(v) = self.max_gap {
            c.max_gap = v;
        }
        if let Some(v) = self.ordered_only {
            c.ordered_only = v;
        }
        if let Some(v) = self.gap_filter {
            c.gap_filter = v;
        }
        if let Some(v) = self.verbal_only {
            c.verbal_only = v;
        }
        if let Some(v) = self.noun_compounds {
            c.noun_compound_detector = v;
        }
        if let Some(v) = self.encoder_filter {
            c.use_encoder_filter = v;
        }
        if let Some(v) = self.max_candidates_per_entry {
            c.max_candidates_per_entry = v;
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct ExecArgs {
    /// Run on the calling thread only.
    #[arg(long)]
    pub sequential: bool,
}

impl ExecArgs {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}
