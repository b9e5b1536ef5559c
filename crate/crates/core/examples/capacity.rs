//! Capacity of a simulated channel and of two textbook channels.

use kinesim::experiment::{self, ExperimentConfig};
use kinesim::infotheory::{self, ConditionalPmf, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE_BITS};
use kinesim::ChannelShape;

fn main() -> kinesim::Result<()> {
    let bsc = ConditionalPmf::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![0, 0])?;
    let erasure = ConditionalPmf::from_rows(vec![vec![0.75, 0.25, 0.0], vec![0.0, 0.25, 0.75]], vec![0, 0])?;
    for (name, pmf) in [("BSC p=0.1", bsc), ("BEC e=0.25", erasure)] {
        let c = infotheory::blahut_arimoto(&pmf, DEFAULT_TOLERANCE_BITS, DEFAULT_MAX_ITERS)?;
        println!("{name}: {:.6} bits after {} iterations", c.capacity_bits, c.iterations);
    }

    let config = ExperimentConfig {
        shape: ChannelShape::polygon(20, 20.0)?,
        tpcu_s: 250.0,
        x_max: 10,
        trials_per_x: 100,
        ..ExperimentConfig::default()
    };
    let report = experiment::run_experiment(&config, experiment::resolve_workers(None))?;
    println!("{} at T={} s, {} MTs, {} trials", config.shape, config.tpcu_s, report.trips.mt_count, report.trials);
    for p in &report.capacity_curve {
        println!("  x_max {:>2}: {:.3} bits", p.x_max, p.capacity_bits);
    }
    let p = &report.capacity.input_pmf;
    println!("  optimal input: {}", p.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" "));
    Ok(())
}
