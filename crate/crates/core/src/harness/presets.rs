//! Named experiment configurations.
//!
//! `exp1`..`exp6` carry the full-scale parameters. The `-desk` variants
//! shrink the cloud to 10,000 core servers and 10^5 requests so they run
//! in seconds.

use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::market::{Initiation, MarketConfig};
use crate::metrics::MetricsConfig;
use crate::topology::TopologyConfig;
use crate::workload::{DistributionSpec, WorkloadConfig};

use super::ExperimentPreset;

pub const PRESET_NAMES: &[&str] = &[
    "exp1", "exp2", "exp3", "exp4", "exp5", "exp6", "exp1-desk", "exp2-desk", "exp3-desk", "exp4-desk",
];

const EQUAL_MODES: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Leader candidates invited per request on the full-size cloud:
/// ⌈0.001 · 83,593⌉.
const FULL_SCALE_CANDIDATE_COUNT: f64 = 84.0;

fn full_scale_topology() -> TopologyConfig {
    TopologyConfig {
        n_core: 8_388_608,
        n_periphery: 1000,
        n_aux: 0,
        primary_contacts_per_core: 500,
        periphery_per_core: 10,
        seed: 0,
    }
}

fn desk_topology() -> TopologyConfig {
    TopologyConfig {
        n_core: 10_000,
        n_periphery: 50,
        n_aux: 0,
        primary_contacts_per_core: 100,
        periphery_per_core: 10,
        seed: 0,
    }
}

fn light_load_workload(hi: f64) -> WorkloadConfig {
    WorkloadConfig {
        interarrival: DistributionSpec::Exponential { mean: 1.5 },
        service: DistributionSpec::Exponential { mean: 1.2 },
        workload_range: (0.1, hi),
        mode_probabilities: EQUAL_MODES,
        n_requests: 50_000_000,
        seed: 0,
    }
}

fn exp1() -> ExperimentPreset {
    ExperimentPreset {
        name: "exp1".into(),
        topology: full_scale_topology(),
        engine: EngineConfig {
            capacity_scu: 10.0,
            initial_state_mix: [0.2, 0.4, 0.15, 0.25],
            initial_load_range: (0.3, 0.8),
            cost_range: (1.0, 10.0),
            seed: 0,
        },
        workload: light_load_workload(8.0),
        market: MarketConfig {
            initiation: Initiation::C2,
            leader_candidate_fraction: 0.001,
            use_secondary_contacts: false,
            invited_fraction_c1: 0.001,
        },
        metrics: MetricsConfig {
            bin_size: 1_000_000,
            n_subsets: 1_000,
            request_share: false,
        },
        scale_note: "full scale: lightly loaded, core-initiated, primary contacts only".into(),
    }
}

fn exp2() -> ExperimentPreset {
    let mut p = exp1();
    p.name = "exp2".into();
    p.workload.workload_range = (0.1, 40.0);
    p.market.use_secondary_contacts = true;
    p.scale_note = "full scale: lightly loaded, workload up to 40 SCU, secondary contacts".into();
    p
}

fn exp3() -> ExperimentPreset {
    let mut p = exp1();
    p.name = "exp3".into();
    p.engine.initial_state_mix = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    p.engine.initial_load_range = (0.5, 0.8);
    p.workload.interarrival = DistributionSpec::Exponential { mean: 1.0 };
    p.workload.service = DistributionSpec::Pareto { alpha: 2.0, scale: 1.0 };
    p.workload.workload_range = (0.1, 40.0);
    p.market.use_secondary_contacts = true;
    p.scale_note = "full scale: highly loaded, core-initiated; secondary contacts enabled \
                    because the reported C2 advantage is attributed to them"
        .into();
    p
}

fn exp4() -> ExperimentPreset {
    let mut p = exp3();
    p.name = "exp4".into();
    p.market.initiation = Initiation::C1;
    p.market.use_secondary_contacts = false;
    p.scale_note = "full scale: highly loaded, periphery-initiated".into();
    p
}

fn exp5() -> ExperimentPreset {
    let mut p = exp1();
    p.name = "exp5".into();
    p.topology = TopologyConfig {
        n_core: 100,
        n_periphery: 2,
        n_aux: 0,
        primary_contacts_per_core: 10,
        periphery_per_core: 1,
        seed: 0,
    };
    p.engine.initial_load_range = (0.7, 0.9);
    p.workload.n_requests = 1_000;
    p.market.initiation = Initiation::C1;
    p.metrics = MetricsConfig {
        bin_size: 20,
        n_subsets: 4,
        request_share: false,
    };
    p.scale_note = "full scale: small overloaded cloud, periphery-initiated; m=1 and n=10 \
                    chosen since m must not exceed M=2"
        .into();
    p
}

fn exp6() -> ExperimentPreset {
    let mut p = exp5();
    p.name = "exp6".into();
    p.workload.workload_range = (0.1, 40.0);
    p.market.use_secondary_contacts = true;
    p.scale_note = "full scale: as exp5 with workload up to 40 SCU; the secondary-contact \
                    flag is set but periphery-initiated auctions never traverse contact lists"
        .into();
    p
}

/// Shrinks a full-scale preset to desk scale.
fn desk(mut p: ExperimentPreset, hold_candidate_count: bool) -> ExperimentPreset {
    p.name = format!("{}-desk", p.name);
    p.topology = desk_topology();
    p.workload.n_requests = 100_000;
    p.metrics.bin_size = p.workload.n_requests / 50;
    p.metrics.n_subsets = 100;
    let pcs = crate::topology::expected_pcs_size(
        p.topology.n_core,
        p.topology.periphery_per_core,
        p.topology.n_periphery,
    );
    if hold_candidate_count {
        p.market.leader_candidate_fraction = FULL_SCALE_CANDIDATE_COUNT / pcs;
        p.scale_note = format!(
            "{}; desk scale N=10,000 M=50 n=100 m=10, 1e5 requests; leader-candidate fraction \
             raised so each request still invites ~84 candidates",
            p.scale_note.trim_start_matches("full scale: ")
        );
    } else {
        p.scale_note = format!(
            "{}; desk scale N=10,000 M=50 n=100 m=10, 1e5 requests; invitation fraction kept at \
             0.1% (~2 invitees per request)",
            p.scale_note.trim_start_matches("full scale: ")
        );
    }
    p
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ExperimentPreset> {
    let p = match name {
        "exp1" => exp1(),
        "exp2" => exp2(),
        "exp3" => exp3(),
        "exp4" => exp4(),
        "exp5" => exp5(),
        "exp6" => exp6(),
        "exp1-desk" => desk(exp1(), true),
        "exp2-desk" => desk(exp2(), true),
        "exp3-desk" => desk(exp3(), false),
        "exp4-desk" => desk(exp4(), false),
        other => {
            return Err(Error::Usage(format!(
                "unknown preset `{other}`; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

pub fn all_presets() -> Vec<ExperimentPreset> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("listed preset")).collect()
}
