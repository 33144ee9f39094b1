//! Draws a request stream and summarizes it.

use sococ::rng::rng_from_seed;
use sococ::workload::{generate_stream, DistributionSpec, Mode, WorkloadConfig};

fn main() -> sococ::Result<()> {
    let config = WorkloadConfig {
        interarrival: DistributionSpec::Exponential { mean: 1.0 },
        service: DistributionSpec::Pareto { alpha: 2.0, scale: 1.0 },
        workload_range: (0.1, 40.0),
        mode_probabilities: [1.0 / 3.0; 3],
        n_requests: 200_000,
        seed: 0,
    };
    let mut count = [0u64; 3];
    let (mut work, mut dur, mut longest, mut last) = (0.0, 0.0, 0.0f64, 0.0);
    for r in generate_stream(&config, 50, rng_from_seed(3))? {
        count[r.mode.index()] += 1;
        work += r.workload;
        dur += r.duration;
        longest = longest.max(r.duration);
        last = r.arrival_time;
    }
    let n = config.n_requests as f64;
    for m in Mode::ALL {
        println!("{m}: {}", count[m.index()]);
    }
    println!("mean workload {:.3} SCU, mean duration {:.3} (expected {}), longest {longest:.1}", work / n, dur / n, config.service.mean());
    println!("offered load {:.2} SCU on average, last arrival at t={last:.1}", work * (dur / n) / last);
    Ok(())
}
