//! Closed-form optimal channels and a ranking of candidate shapes at T = 320 s.

use kinesim::optimizer::{self, PolygonSides, DEFAULT_CIRCLE_SIDES};
use kinesim::ChannelShape;

fn main() -> kinesim::Result<()> {
    let v = 0.5;
    for t in [160.0, 240.0, 320.0] {
        let rect = optimizer::optimize_rectangle(t, v)?;
        let circle = optimizer::optimize_polygon(t, v, PolygonSides::Unbounded, DEFAULT_CIRCLE_SIDES)?;
        let oct = optimizer::optimize_polygon(t, v, PolygonSides::Finite(8), DEFAULT_CIRCLE_SIDES)?;
        let ring = optimizer::optimize_ring(t, v, DEFAULT_CIRCLE_SIDES)?;
        println!("T = {t} s");
        for o in [rect, oct, circle, ring] {
            println!("  {:<26} A/P = {:.3} µm", o.shape.to_string(), o.objective_um);
        }
    }

    let candidates = vec![
        ChannelShape::rectangle(40.0, 40.0)?,
        ChannelShape::rectangle(50.0, 30.0)?,
        ChannelShape::polygon(12, 25.76)?,
        ChannelShape::ring(20, 10.0, 25.57)?,
        ChannelShape::polygon(20, 30.0)?,
    ];
    println!("ranking at T = 320 s:");
    for r in optimizer::rank_shapes(&candidates, 320.0, v) {
        println!("  {:<26} A/P = {:.3} µm feasible = {}", r.shape.to_string(), r.objective_um, r.feasible);
    }
    Ok(())
}
