//! Area, perimeter, containment and first boundary hit for each shape family.

use kinesim::geometry::ChainId;
use kinesim::{ChannelShape, Point};

fn main() -> kinesim::Result<()> {
    let shapes =
        [ChannelShape::rectangle(40.0, 20.0)?, ChannelShape::polygon(8, 26.13)?, ChannelShape::ring(20, 10.0, 25.57)?];
    for s in &shapes {
        println!("{s}");
        println!(
            "  area {:.2} µm², perimeter {:.2} µm, A/P {:.3} µm",
            s.area(),
            s.perimeter(),
            s.area() / s.perimeter()
        );
        println!("  outer edges {}, inner edges {}", s.chain(ChainId::Outer).len(), s.chain(ChainId::Inner).len());
        let probe = Point::new(5.0, 5.0);
        println!("  contains {probe:?}: {}", s.contains(probe));
        let from = Point::new(15.0, 0.0);
        let to = Point::new(-60.0, 0.0);
        match s.first_exit(from, to) {
            Some(hit) => {
                println!("  ray from {from:?} leaves at ({:.3}, {:.3}) on edge {}", hit.hit.x, hit.hit.y, hit.edge.id)
            }
            None => println!("  ray from {from:?} stays inside"),
        }
    }
    Ok(())
}
