use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sococ::harness::{self, ExperimentPreset, RunSettings};
use sococ::topology::TopologyConfig;
use sococ::{Error, Result};

#[derive(Parser)]
#[command(name = "sococ", version, about = "Auction-driven self-organizing cloud simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a contact topology and write its statistics.
    Organize(OrganizeArgs),
    /// Run one experiment.
    Run(RunArgs),
    /// Run one experiment over several seeds.
    Sweep(SweepArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct OrganizeArgs {
    #[arg(long)]
    n_core: usize,
    #[arg(long)]
    n_periphery: usize,
    /// Periphery servers known to each core server.
    #[arg(long)]
    m: usize,
    /// Primary contacts per core server.
    #[arg(long, default_value_t = 0)]
    n_contacts: usize,
    #[arg(long, default_value_t = 0)]
    n_aux: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cores sampled for secondary-contact counts (default: all up to 1e5, else 1000).
    #[arg(long)]
    stats_sample: Option<usize>,
    #[arg(long, env = "SOCOC_OUT")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bin_size: Option<u64>,
    #[arg(long)]
    n_subsets: Option<u64>,
    #[arg(long)]
    check_invariants: bool,
    #[arg(long)]
    allow_huge: bool,
    #[arg(long, env = "SOCOC_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated seeds or an inclusive range such as `1..5`.
    #[arg(long, default_value = "1..5")]
    seeds: String,
    #[arg(long, default_value_t = 4)]
    jobs: usize,
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("cannot parse seeds `{raw}`; use `1,2,3` or `1..5`"));
    if let Some((a, b)) = raw.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    raw.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn load_experiment(args: &ExperimentArgs) -> Result<ExperimentPreset> {
    match (&args.preset, &args.config) {
        (Some(name), _) => harness::preset(name),
        (None, Some(path)) => harness::load_config(path),
        (None, None) => Err(Error::Usage("one of --preset or --config is required".into())),
    }
}

fn settings(args: &ExperimentArgs, seed: u64) -> RunSettings {
    RunSettings {
        seed,
        out_dir: Some(args.out.clone()),
        check_invariants: args.check_invariants,
        allow_huge: args.allow_huge,
        bin_size: args.bin_size,
        n_subsets: args.n_subsets,
        record_events: false,
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Organize(a) => {
            let config = TopologyConfig {
                n_core: a.n_core,
                n_periphery: a.n_periphery,
                n_aux: a.n_aux,
                primary_contacts_per_core: a.n_contacts,
                periphery_per_core: a.m,
                seed: a.seed,
            };
            let result = harness::organize_with_stats(&config, a.stats_sample)?;
            harness::emit_topology(&config, &result.stats, &a.out)?;
            println!(
                "pcs mean {:.3}, secondary mean {:.3} over {} cores -> {}",
                result.stats.pcs_mean,
                result.stats.secondary_mean,
                result.stats.secondary_counts.len(),
                a.out.display()
            );
        }
        Command::Run(a) => {
            let preset = load_experiment(&a.experiment)?;
            let r = harness::run_experiment(&preset, &settings(&a.experiment, a.seed))?;
            for (mode, t) in sococ::workload::Mode::ALL.iter().zip(&r.report.totals) {
                println!("{mode}: {} requests, {} failed, success {:.5}", t.requests, t.failed, t.success_rate);
            }
            println!(
                "coalition count mean {:.4}, unsatisfied {} -> {}",
                r.report.coalitions.mean,
                r.report.ledger.unsatisfied,
                a.experiment.out.display()
            );
        }
        Command::Sweep(a) => {
            let preset = load_experiment(&a.experiment)?;
            let seeds = parse_seeds(&a.seeds)?;
            let results = harness::sweep(&preset, &seeds, &settings(&a.experiment, 0), a.jobs);
            let table = harness::sweep_table(&results);
            let out = &a.experiment.out;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let path = out.join("sweep.csv");
            std::fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
            print!("{table}");
            if let Some((_, Err(e))) = results.into_iter().find(|(_, r)| r.is_err()) {
                return Err(e);
            }
        }
        Command::Presets => {
            for p in harness::presets::all_presets() {
                println!("{:<10} {}", p.name, p.scale_note);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
