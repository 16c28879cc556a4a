//! Run configuration: one JSON document with a section per module, every
//! field optional with the architecture defaults filled in.

use anyhow::{Context, Result};
use ponfog::power::PowerParams;
use ponfog::sim::SimParams;
use ponfog::topology::{OltCapacity, SpineLeafParams, TopologyParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologyParams,
    pub olt: OltCapacity,
    pub spine_leaf: SpineLeafParams,
    pub power: PowerParams<f64>,
    pub sim: SimSection,
    /// Directory of the config file; used to resolve relative paths inside
    /// the document. Not part of the JSON schema.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub line_rate_gbps: u64,
    pub propagation_us_per_km: f64,
    pub olt_processing_us: u64,
    pub tuning_us: u64,
    pub control_msg_us: u64,
    pub seed: u64,
    /// Path to a routing-map CSV to simulate with; when absent the solver's
    /// optimum for the configured topology is used. Relative paths resolve
    /// against the config file's directory.
    pub routing_map: Option<PathBuf>,
}

impl Default for SimSection {
    fn default() -> Self {
        let p = SimParams::default();
        SimSection {
            line_rate_gbps: p.line_rate_gbps,
            propagation_us_per_km: p.propagation_us_per_km,
            olt_processing_us: p.olt_processing_us,
            tuning_us: p.tuning_us,
            control_msg_us: p.control_msg_us,
            seed: p.seed,
            routing_map: None,
        }
    }
}

impl SimSection {
    pub fn params(&self) -> SimParams {
        SimParams {
            line_rate_gbps: self.line_rate_gbps,
            propagation_us_per_km: self.propagation_us_per_km,
            olt_processing_us: self.olt_processing_us,
            tuning_us: self.tuning_us,
            control_msg_us: self.control_msg_us,
            seed: self.seed,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    /// Resolves a config-relative path.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match (&self.base_dir, p.is_relative()) {
            (Some(base), true) => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}
