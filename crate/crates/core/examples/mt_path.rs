//! Writes one MT trajectory to `mt_path.csv` and reports time spent on the wall.
//!
//! `cargo run --release --example mt_path -- [steps] [seed]`

use std::fs::File;
use std::io::BufWriter;

use kinesim::motility::{self, WallMode};
use kinesim::{ChannelShape, MotilityParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kinesim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let steps = args.first().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);

    let shape = ChannelShape::ring(8, 20.0, 25.0)?;
    let params = MotilityParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = motility::random_pose(&shape, &mut rng);
    let path = motility::simulate_path(&shape, start, &params, steps, &mut rng);

    let on_wall = path.iter().filter(|p| matches!(p.wall_mode, WallMode::Following(_))).count();
    println!("{shape}: {} poses, {:.1}% following a wall", path.len(), 100.0 * on_wall as f64 / path.len() as f64);
    motility::write_path_csv(BufWriter::new(File::create("mt_path.csv")?), &path, params.dt_s)?;
    println!("wrote mt_path.csv");
    Ok(())
}
