//! Experiment wiring: topology → fleet → request stream → auctions →
//! report files.

pub mod config;
pub mod presets;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::info;

use crate::engine::{self, init_servers, EngineConfig, RunOptions, RunOutcome};
use crate::error::{Error, Result};
use crate::market::MarketConfig;
use crate::metrics::{self, MetricsCollector, MetricsConfig, ReportMeta, RunReport};
use crate::rng::{derive_seed, rng_from_seed, Stream};
use crate::topology::{
    self, compute_stats, default_sample_size, expected_pcs_size, expected_secondary_fraction, organize,
    ContactTopology, TopologyConfig, TopologyStats,
};
use crate::workload::{generate_stream, WorkloadConfig};

pub use config::{load_config, parse_config};
pub use presets::{preset, PRESET_NAMES};

/// Core servers above which a run counts as full scale.
const HUGE_CORES: usize = 1_000_000;
const HUGE_REQUESTS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub topology: TopologyConfig,
    pub engine: EngineConfig,
    pub workload: WorkloadConfig,
    pub market: MarketConfig,
    pub metrics: MetricsConfig,
    pub scale_note: String,
}

impl ExperimentPreset {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        self.topology.validate()?;
        self.engine.validate()?;
        self.workload.validate()?;
        self.market.validate()?;
        self.metrics.validate()
    }

    /// Needs hours and tens of GB; guarded behind `allow_huge`.
    pub fn is_huge(&self) -> bool {
        self.topology.n_core > HUGE_CORES || self.workload.n_requests > HUGE_REQUESTS
    }

    /// Sets every component seed from one run seed.
    pub fn seeded(mut self, seed: u64) -> Self {
        self.topology.seed = derive_seed(seed, Stream::Topology);
        self.engine.seed = derive_seed(seed, Stream::Fleet);
        self.workload.seed = derive_seed(seed, Stream::Workload);
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub check_invariants: bool,
    pub allow_huge: bool,
    pub bin_size: Option<u64>,
    pub n_subsets: Option<u64>,
    pub record_events: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub organize: Duration,
    pub init: Duration,
    pub simulate: Duration,
    pub emit: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: RunReport,
    pub outcome: RunOutcome,
    pub timings: PhaseTimings,
}

/// Runs one experiment end to end and, if `out_dir` is set, writes the
/// report files there.
pub fn run_experiment(preset: &ExperimentPreset, settings: &RunSettings) -> Result<ExperimentResult> {
    let mut preset = preset.clone();
    if let Some(b) = settings.bin_size {
        preset.metrics.bin_size = b;
    }
    if let Some(k) = settings.n_subsets {
        preset.metrics.n_subsets = k;
    }
    preset.validate()?;
    if preset.is_huge() && !settings.allow_huge {
        return Err(Error::Usage(format!(
            "preset `{}` runs at full scale ({} core servers, {} requests); pass --allow-huge",
            preset.name, preset.topology.n_core, preset.workload.n_requests
        )));
    }
    let config_echo = serde_json::to_value(config::ExperimentFile::from(&preset)).expect("config serializes");
    let preset = preset.seeded(settings.seed);
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let topology = organize(&preset.topology, &mut rng_from_seed(preset.topology.seed))?;
    timings.organize = t.elapsed();
    info!("{}: organized {} cores in {:?}", preset.name, topology.n_core(), timings.organize);

    let t = Instant::now();
    let fleet = init_servers(&topology, &preset.engine, &mut rng_from_seed(preset.engine.seed))?;
    let stream = generate_stream(
        &preset.workload,
        topology.n_periphery(),
        rng_from_seed(preset.workload.seed),
    )?;
    timings.init = t.elapsed();
    info!("{}: fleet initialized in {:?}", preset.name, timings.init);

    let t = Instant::now();
    let mut collector = MetricsCollector::new(preset.metrics.clone())?;
    let options = RunOptions {
        check_invariants: settings.check_invariants,
        record_events: settings.record_events,
    };
    let mut market_rng = rng_from_seed(derive_seed(settings.seed, Stream::Market));
    let outcome = engine::run(
        &topology,
        fleet,
        stream,
        &preset.market,
        &mut collector,
        &mut market_rng,
        options,
    )?;
    timings.simulate = t.elapsed();
    info!(
        "{}: {} requests simulated in {:?} ({} unsatisfied)",
        preset.name, outcome.ledger.n_requests, timings.simulate, outcome.ledger.unsatisfied
    );

    let report = collector.finish(
        &outcome.fleet,
        outcome.ledger,
        ReportMeta {
            preset: preset.name.clone(),
            seed: settings.seed,
            scale_note: preset.scale_note.clone(),
            config: config_echo,
        },
    );

    let t = Instant::now();
    if let Some(dir) = &settings.out_dir {
        metrics::emit(&report, dir)?;
    }
    timings.emit = t.elapsed();

    Ok(ExperimentResult {
        report,
        outcome,
        timings,
    })
}

/// Runs several seeds of one preset on up to `jobs` threads. Each seed
/// writes into `<out_dir>/seed-<seed>/` when an output directory is set.
pub fn sweep(
    preset: &ExperimentPreset,
    seeds: &[u64],
    settings: &RunSettings,
    jobs: usize,
) -> Vec<(u64, Result<ExperimentResult>)> {
    let jobs = jobs.max(1);
    let mut results: Vec<(u64, Result<ExperimentResult>)> = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(jobs) {
        let batch: Vec<(u64, Result<ExperimentResult>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| {
                    let mut s = settings.clone();
                    s.seed = seed;
                    s.out_dir = settings.out_dir.as_ref().map(|d| d.join(format!("seed-{seed}")));
                    scope.spawn(move || (seed, run_experiment(preset, &s)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        });
        results.extend(batch);
    }
    results
}

/// Per-seed summary table for a sweep.
pub fn sweep_table(results: &[(u64, Result<ExperimentResult>)]) -> String {
    let mut out = String::from("seed,M1,M2,M3,overall,unsatisfied,coalition_mean\n");
    for (seed, r) in results {
        if let Ok(r) = r {
            let t = &r.report.totals;
            writeln!(
                out,
                "{seed},{},{},{},{},{},{}",
                metrics::round_sig(t[0].success_rate),
                metrics::round_sig(t[1].success_rate),
                metrics::round_sig(t[2].success_rate),
                metrics::round_sig(r.report.overall().success_rate),
                r.report.ledger.unsatisfied,
                metrics::round_sig(r.report.coalitions.mean),
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct OrganizeResult {
    pub topology: ContactTopology,
    pub stats: TopologyStats,
}

/// Builds a topology and its statistics; `stats_sample` defaults to every
/// core up to 10^5 cores and a 1,000-core sample above that.
pub fn organize_with_stats(config: &TopologyConfig, stats_sample: Option<usize>) -> Result<OrganizeResult> {
    let topology = organize(config, &mut rng_from_seed(derive_seed(config.seed, Stream::Topology)))?;
    let k = stats_sample.unwrap_or_else(|| default_sample_size(config.n_core));
    let stats = compute_stats(&topology, k, &mut rng_from_seed(derive_seed(config.seed, Stream::Stats)))?;
    Ok(OrganizeResult { topology, stats })
}

/// Writes `topology_stats.csv` and `secondary_histogram.csv`.
pub fn emit_topology(config: &TopologyConfig, stats: &TopologyStats, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let n = config.n_core as f64;
    let m = config.periphery_per_core;
    let pcs_min = stats.pcs_sizes.iter().min().copied().unwrap_or(0);
    let pcs_max = stats.pcs_sizes.iter().max().copied().unwrap_or(0);
    let fraction = expected_secondary_fraction(config.n_periphery, m)?;
    let f = |x: f64| metrics::round_sig(x).to_string();
    let rows: Vec<(&str, String)> = vec![
        ("n_core", config.n_core.to_string()),
        ("n_periphery", config.n_periphery.to_string()),
        ("n_aux", config.n_aux.to_string()),
        ("periphery_per_core", m.to_string()),
        ("primary_contacts_per_core", config.primary_contacts_per_core.to_string()),
        ("seed", config.seed.to_string()),
        ("pcs_mean", f(stats.pcs_mean)),
        ("pcs_mean_over_n", f(stats.pcs_mean / n)),
        ("pcs_expected", f(expected_pcs_size(config.n_core, m, config.n_periphery))),
        ("pcs_min", pcs_min.to_string()),
        ("pcs_max", pcs_max.to_string()),
        ("secondary_sample_size", stats.secondary_counts.len().to_string()),
        ("secondary_exact", stats.exact.to_string()),
        ("secondary_min", stats.secondary_min.to_string()),
        ("secondary_max", stats.secondary_max.to_string()),
        ("secondary_mean", f(stats.secondary_mean)),
        ("secondary_stddev", f(stats.secondary_stddev)),
        ("secondary_mean_over_n", f(stats.secondary_mean / n)),
        ("secondary_expected_fraction", f(fraction)),
    ];
    let mut csv = String::from("metric,value\n");
    for (k, v) in rows {
        writeln!(csv, "{k},{v}").unwrap();
    }
    let path = out_dir.join("topology_stats.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    let mut hist = String::from("bucket_lo,bucket_hi,count\n");
    for b in &stats.secondary_histogram.buckets {
        writeln!(hist, "{},{},{}", f(b.lo), f(b.hi), b.count).unwrap();
    }
    let path = out_dir.join("secondary_histogram.csv");
    std::fs::write(&path, hist).map_err(|e| Error::io(&path, e))
}

/// Re-exported so callers can rebucket without importing `topology`.
pub use topology::secondary_histogram;
