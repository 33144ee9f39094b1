//! Runs a built-in preset and writes the report files.
//!
//!     cargo run --release --example run_preset -- exp3-desk out/exp3

use std::path::PathBuf;

use sococ::harness::{preset, run_experiment, RunSettings};
use sococ::workload::Mode;

fn main() -> sococ::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "exp5".into());
    let out = args.next().map(PathBuf::from);
    let settings = RunSettings {
        seed: 1,
        out_dir: out.clone(),
        check_invariants: true,
        ..RunSettings::default()
    };
    let r = run_experiment(&preset(&name)?, &settings)?;
    for m in Mode::ALL {
        let t = r.report.totals_for(m);
        let bins: Vec<String> = r.report.bins_for(m).map(|b| format!("{:.3}", b.success_rate)).collect();
        println!("{m}: {:.4} over {} requests; bins {}", t.success_rate, t.requests, bins.join(" "));
    }
    println!(
        "{} unsatisfied, coalition count mean {:.2}, simulated in {:?}",
        r.report.ledger.unsatisfied, r.report.coalitions.mean, r.timings.simulate
    );
    if let Some(dir) = out {
        println!("report written to {}", dir.display());
    }
    Ok(())
}
