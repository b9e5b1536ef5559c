//! One channel use in a 40 µm square: x particles released, y delivered.
//!
//! `cargo run --release --example channel_use -- [x] [tpcu_s] [seed]`

use std::time::Instant;

use kinesim::transport::{self, ZoneConfig, DEFAULT_MAX_LOAD};
use kinesim::{ChannelShape, MotilityParams};

fn main() -> kinesim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (x, tpcu, seed) = (arg(0, 20.0) as usize, arg(1, 320.0), arg(2, 7.0) as u64);

    let shape = ChannelShape::rectangle(40.0, 40.0)?;
    let layout = transport::build_zones(&shape, ZoneConfig::default())?;
    let params = MotilityParams::default();
    let mts = transport::mt_count_for(&shape, 10.0, 0.001);
    println!("{shape}: {} tx cells, {mts} MTs, zone gap {:.1} µm", layout.tx_capacity(), layout.zone_gap_um());

    let started = Instant::now();
    let r = transport::run_channel_use(&shape, &layout, x, tpcu, &params, mts, DEFAULT_MAX_LOAD, seed)?;
    println!(
        "x = {x}, y = {}, in transit {}, left in tx {}",
        r.delivered, r.particles_in_transit, r.particles_remaining
    );
    println!("trips per MT: {:?}", r.per_mt_trips);
    println!("{:.2} ms", started.elapsed().as_secs_f64() * 1e3);
    Ok(())
}
