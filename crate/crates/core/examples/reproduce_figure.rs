//! Runs one figure sweep and prints the capacity at x_max per shape.
//!
//! `cargo run --release --example reproduce_figure -- fig7 [trials] [x_max] [seed]`
//!
//! CSVs and a JSON report land in `out/<fig>/`.

use std::path::Path;
use std::time::Instant;

use kinesim::experiment::{self, Figure, SweepSettings};

fn main() -> kinesim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let figure: Figure = args.first().map_or("fig7", String::as_str).parse()?;
    let num = |i: usize, d: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let settings =
        SweepSettings { trials: num(1, 100), x_max: num(2, 20), seed: num(3, 1) as u64, ..SweepSettings::default() };

    let started = Instant::now();
    let report = experiment::reproduce(figure, &settings, experiment::resolve_workers(None))?;
    for c in &report.curves {
        println!(
            "{:<28} T={:<4} MTs={:<3} trips={:>6.2}  C({})={:.3} bits",
            c.label,
            c.tpcu_s,
            c.report.trips.mt_count,
            c.report.trips.mean_total_trips,
            settings.x_max,
            c.report.capacity.capacity_bits
        );
    }
    for (label, rows) in &report.trips {
        for r in rows {
            println!(
                "{label:<28} T={:<4} sim={:.3} model={:.3} err={:.1}%",
                r.tpcu_s,
                r.simulated_mean_trips,
                r.model_trips,
                100.0 * r.relative_error
            );
        }
    }
    if let Some(best) = report.argmax_label() {
        println!("argmax: {best}");
    }
    let out = Path::new("out").join(figure.id());
    for f in experiment::write_figure(&report, &out)? {
        println!("wrote {}", f.display());
    }
    println!("{:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}
