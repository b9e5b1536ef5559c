//! Single-MT trip counts from simulation against the v·T/P estimate.
//!
//! `cargo run --release --example trip_model -- [trials]`

use kinesim::experiment::{self, Figure};
use kinesim::transport::ZoneConfig;
use kinesim::MotilityParams;

fn main() -> kinesim::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let workers = experiment::resolve_workers(None);
    let t_list = [160.0, 320.0, 640.0, 1280.0];
    for (label, shape) in Figure::Fig4.shapes() {
        println!("{label} (P = {:.1} µm)", shape.perimeter());
        let rows = experiment::trip_table(
            &shape,
            &t_list,
            trials,
            11,
            &MotilityParams::default(),
            ZoneConfig::default(),
            workers,
        )?;
        for r in rows {
            println!(
                "  T={:<5} simulated {:.3}  estimate {:.3}  error {:.1}%",
                r.tpcu_s,
                r.simulated_mean_trips,
                r.model_trips,
                100.0 * r.relative_error
            );
        }
    }
    Ok(())
}
