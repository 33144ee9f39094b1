//! C1 against C2 on the heavy-load desk presets over a few seeds.

use sococ::harness::{preset, sweep, RunSettings};

fn main() -> sococ::Result<()> {
    let seeds = [1, 2, 3, 4, 5];
    for name in ["exp3-desk", "exp4-desk"] {
        let p = preset(name)?;
        let results = sweep(&p, &seeds, &RunSettings::default(), 4);
        let mut rates = Vec::new();
        let mut coalitions = 0.0;
        for (_, r) in results {
            let r = r?;
            rates.push(r.report.overall().success_rate);
            coalitions += r.report.coalitions.mean;
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        println!(
            "{name} ({:?}, secondary {}): success {mean:.4}, coalition count mean {:.2}",
            p.market.initiation,
            p.market.use_secondary_contacts,
            coalitions / seeds.len() as f64
        );
    }
    Ok(())
}
