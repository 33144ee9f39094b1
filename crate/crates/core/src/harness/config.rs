//! JSON run-config files. Unknown keys are rejected and every validation
//! error names the offending field path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::market::{Initiation, MarketConfig};
use crate::metrics::MetricsConfig;
use crate::topology::TopologyConfig;
use crate::workload::WorkloadConfig;

use super::ExperimentPreset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub name: String,
    #[serde(default)]
    pub scale_note: String,
    pub topology: TopologyConfig,
    pub engine: EngineSection,
    pub workload: WorkloadConfig,
    pub market: MarketSection,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default = "default_capacity")]
    pub capacity_scu: f64,
    pub initial_state_mix: [f64; 4],
    pub initial_load_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub initiation: Initiation,
    #[serde(default = "default_fraction")]
    pub leader_candidate_fraction: f64,
    #[serde(default)]
    pub use_secondary: bool,
    #[serde(default = "default_cost_range")]
    pub cost_range: (f64, f64),
    #[serde(default = "default_fraction")]
    pub invited_fraction_c1: f64,
}

fn default_capacity() -> f64 {
    10.0
}

fn default_fraction() -> f64 {
    0.001
}

fn default_cost_range() -> (f64, f64) {
    (1.0, 10.0)
}

impl From<&ExperimentPreset> for ExperimentFile {
    fn from(p: &ExperimentPreset) -> Self {
        Self {
            name: p.name.clone(),
            scale_note: p.scale_note.clone(),
            topology: p.topology.clone(),
            engine: EngineSection {
                capacity_scu: p.engine.capacity_scu,
                initial_state_mix: p.engine.initial_state_mix,
                initial_load_range: p.engine.initial_load_range,
            },
            workload: p.workload.clone(),
            market: MarketSection {
                initiation: p.market.initiation,
                leader_candidate_fraction: p.market.leader_candidate_fraction,
                use_secondary: p.market.use_secondary_contacts,
                cost_range: p.engine.cost_range,
                invited_fraction_c1: p.market.invited_fraction_c1,
            },
            metrics: p.metrics.clone(),
        }
    }
}

impl From<ExperimentFile> for ExperimentPreset {
    fn from(f: ExperimentFile) -> Self {
        Self {
            name: f.name,
            scale_note: f.scale_note,
            topology: f.topology,
            engine: EngineConfig {
                capacity_scu: f.engine.capacity_scu,
                initial_state_mix: f.engine.initial_state_mix,
                initial_load_range: f.engine.initial_load_range,
                cost_range: f.market.cost_range,
                seed: 0,
            },
            workload: f.workload,
            market: MarketConfig {
                initiation: f.market.initiation,
                leader_candidate_fraction: f.market.leader_candidate_fraction,
                use_secondary_contacts: f.market.use_secondary,
                invited_fraction_c1: f.market.invited_fraction_c1,
            },
            metrics: f.metrics,
        }
    }
}

/// Parses and validates a run config.
pub fn parse_config(json: &str) -> Result<ExperimentPreset> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: ExperimentFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
    })?;
    let preset = ExperimentPreset::from(file);
    preset.validate()?;
    Ok(preset)
}

pub fn load_config(path: &Path) -> Result<ExperimentPreset> {
    // an unreadable --config is the caller's mistake, not an I/O failure mid-run
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn to_json(preset: &ExperimentPreset) -> String {
    serde_json::to_string_pretty(&ExperimentFile::from(preset)).expect("config serializes")
}
