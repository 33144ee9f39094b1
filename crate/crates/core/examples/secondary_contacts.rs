//! Secondary-contact counts against the hypergeometric overlap oracle.

use sococ::rng::rng_from_seed;
use sococ::topology::{compute_stats, expected_secondary_fraction, organize, TopologyConfig};

fn main() -> sococ::Result<()> {
    let (n, big_m) = (5_000, 1_000);
    println!("{:>4} {:>10} {:>10} {:>8} {:>8}", "m", "measured", "oracle", "min", "max");
    for m in [5, 10, 20, 50] {
        let config = TopologyConfig {
            n_core: n,
            n_periphery: big_m,
            n_aux: 0,
            primary_contacts_per_core: 0,
            periphery_per_core: m,
            seed: m as u64,
        };
        let topology = organize(&config, &mut rng_from_seed(config.seed))?;
        let stats = compute_stats(&topology, 1_000, &mut rng_from_seed(0))?;
        println!(
            "{m:>4} {:>9.3}% {:>9.3}% {:>8} {:>8}",
            100.0 * stats.secondary_mean / (n - 1) as f64,
            100.0 * expected_secondary_fraction(big_m, m)?,
            stats.secondary_min,
            stats.secondary_max
        );
    }

    // text histogram for m = 10
    let config = TopologyConfig {
        n_core: n,
        n_periphery: big_m,
        n_aux: 0,
        primary_contacts_per_core: 0,
        periphery_per_core: 10,
        seed: 10,
    };
    let topology = organize(&config, &mut rng_from_seed(config.seed))?;
    let stats = compute_stats(&topology, n, &mut rng_from_seed(0))?;
    let h = sococ::topology::secondary_histogram(&stats, 12)?;
    let peak = h.buckets.iter().map(|b| b.count).max().unwrap_or(1);
    for b in &h.buckets {
        println!("{:>7.0}-{:<7.0} {}", b.lo, b.hi, "#".repeat((60 * b.count / peak) as usize));
    }
    Ok(())
}
