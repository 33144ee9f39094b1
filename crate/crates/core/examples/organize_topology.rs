//! Builds a contact topology and compares pcs sizes with N·m/M.
//!
//!     cargo run --release --example organize_topology -- 100000 1000 10

use sococ::topology::{compute_stats, expected_pcs_size, organize, TopologyConfig};
use sococ::rng::rng_from_seed;

fn main() -> sococ::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (n_core, n_periphery, m) = match args[..] {
        [a, b, c] => (a, b, c),
        _ => (100_000, 1_000, 10),
    };
    let config = TopologyConfig {
        n_core,
        n_periphery,
        n_aux: 0,
        primary_contacts_per_core: 100.min(n_core - 1),
        periphery_per_core: m,
        seed: 1,
    };
    let topology = organize(&config, &mut rng_from_seed(config.seed))?;
    let stats = compute_stats(&topology, 1_000, &mut rng_from_seed(2))?;

    let sizes = &stats.pcs_sizes;
    println!("N={n_core} M={n_periphery} m={m}");
    println!(
        "pcs size: mean {:.1} (expected {:.1}), min {}, max {}",
        stats.pcs_mean,
        expected_pcs_size(n_core, m, n_periphery),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );
    println!("p̄/N = {:.4}%", 100.0 * stats.pcs_mean / n_core as f64);
    Ok(())
}
