//! Parses a JSON run config, runs it and prints the per-bin series.

use sococ::harness::{parse_config, run_experiment, RunSettings};

const CONFIG: &str = r#"{
  "name": "tiny-c2",
  "topology": {"n_core": 2000, "n_periphery": 20, "primary_contacts_per_core": 20, "periphery_per_core": 3},
  "engine": {"initial_state_mix": [0.1, 0.3, 0.3, 0.3], "initial_load_range": [0.4, 0.8]},
  "workload": {
    "interarrival": {"kind": "exponential", "mean": 0.2},
    "service": {"kind": "pareto", "alpha": 2.0, "scale": 1.0},
    "workload_scu": [0.1, 20.0],
    "mode_probs": [0.5, 0.25, 0.25],
    "n_requests": 20000
  },
  "market": {"initiation": "C2", "leader_candidate_fraction": 0.01, "use_secondary": true},
  "metrics": {"bin_size": 1000, "n_subsets": 20}
}"#;

fn main() -> sococ::Result<()> {
    let preset = parse_config(CONFIG)?;
    let r = run_experiment(&preset, &RunSettings::default())?;
    println!("mode,bin,success_rate,subset_stddev");
    for b in &r.report.bins {
        println!("{},{},{:.4},{:.4}", b.mode, b.bin_index, b.success_rate, b.subset_stddev);
    }

    // a typo is reported with its field path
    match parse_config(&CONFIG.replace("mode_probs", "mode_prob")) {
        Err(e) => eprintln!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
