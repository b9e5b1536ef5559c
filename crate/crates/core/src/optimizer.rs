//! Trip-rate model and closed-form channel-shape optimisation.
//!
//! A single MT is expected to complete `v·T / P` trips, and the channel
//! holds `A·h·C` MTs, so total throughput scales with `A / P`. Maximising
//! `A / P` under `P ≤ T·v` gives the optimum for each shape family.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChannelShape, ShapeKind};

/// Absolute slack on the perimeter constraint, µm.
pub const FEASIBILITY_TOL_UM: f64 = 1e-9;

/// Sides used to stand in for a circle.
pub const DEFAULT_CIRCLE_SIDES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripModelParams {
    pub tpcu_s: f64,
    pub v_avg_um_s: f64,
    pub concentration_per_fl: f64,
    pub height_um: f64,
}

/// `v·T / P`.
pub fn expected_single_mt_trips(shape: &ChannelShape, tpcu_s: f64, v_avg_um_s: f64) -> f64 {
    v_avg_um_s * tpcu_s / shape.perimeter()
}

/// `T·v·C·h·A / P`, without flooring the MT count.
pub fn expected_total_trips(shape: &ChannelShape, p: &TripModelParams) -> f64 {
    p.tpcu_s * p.v_avg_um_s * p.concentration_per_fl * p.height_um * shape.area() / shape.perimeter()
}

/// Area-to-perimeter ratio in µm.
pub fn objective(shape: &ChannelShape) -> f64 {
    shape.area() / shape.perimeter()
}

pub fn is_feasible(shape: &ChannelShape, tpcu_s: f64, v_avg_um_s: f64) -> bool {
    shape.perimeter() <= tpcu_s * v_avg_um_s + FEASIBILITY_TOL_UM
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeFamily {
    Rectangle,
    Polygon,
    Ring,
}

impl std::str::FromStr for ShapeFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangle" => Ok(ShapeFamily::Rectangle),
            "polygon" => Ok(ShapeFamily::Polygon),
            "ring" => Ok(ShapeFamily::Ring),
            other => Err(Error::InvalidParameter(format!("unknown shape family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolygonSides {
    Finite(usize),
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalShape {
    pub family: ShapeFamily,
    /// Constraint-binding solution; for the circle limit, its polygonal stand-in.
    pub shape: ChannelShape,
    pub objective_um: f64,
    pub binding: bool,
    /// Exact circle radius when the optimum is the `n → ∞` limit.
    pub circle_radius_um: Option<f64>,
}

fn budget(tpcu_s: f64, v_avg_um_s: f64) -> Result<f64> {
    let b = tpcu_s * v_avg_um_s;
    if b.is_finite() && b > 0.0 {
        Ok(b)
    } else {
        Err(Error::InvalidParameter(format!("T·v_avg must be positive, got T={tpcu_s}, v={v_avg_um_s}")))
    }
}

/// Circumradius of the `n`-gon with perimeter `perimeter`.
pub fn polygon_radius_for_perimeter(n: usize, perimeter: f64) -> f64 {
    perimeter / (2.0 * n as f64 * (PI / n as f64).sin())
}

/// The square with side `T·v / 4`.
pub fn optimize_rectangle(tpcu_s: f64, v_avg_um_s: f64) -> Result<OptimalShape> {
    let side = 0.25 * budget(tpcu_s, v_avg_um_s)?;
    Ok(OptimalShape {
        family: ShapeFamily::Rectangle,
        shape: ChannelShape::rectangle(side, side)?,
        objective_um: side / 4.0,
        binding: true,
        circle_radius_um: None,
    })
}

/// Best regular polygon: for fixed `n` the binding radius; unbounded gives the
/// circle of radius `T·v / 2π`, reported through an `n_repr`-gon of the same perimeter.
pub fn optimize_polygon(tpcu_s: f64, v_avg_um_s: f64, sides: PolygonSides, n_repr: usize) -> Result<OptimalShape> {
    let b = budget(tpcu_s, v_avg_um_s)?;
    match sides {
        PolygonSides::Finite(n) => {
            if n < 3 {
                return Err(Error::InvalidParameter(format!("polygon needs n >= 3, got {n}")));
            }
            let r = polygon_radius_for_perimeter(n, b);
            Ok(OptimalShape {
                family: ShapeFamily::Polygon,
                shape: ChannelShape::polygon(n, r)?,
                objective_um: 0.5 * r * (PI / n as f64).cos(),
                binding: true,
                circle_radius_um: None,
            })
        }
        PolygonSides::Unbounded => {
            let rc = b / (2.0 * PI);
            let repr = optimize_polygon(tpcu_s, v_avg_um_s, PolygonSides::Finite(n_repr), n_repr)?;
            Ok(OptimalShape { objective_um: 0.5 * rc, circle_radius_um: Some(rc), ..repr })
        }
    }
}

/// Rings are optimised by closing the hole: `r_i = 0` on the circle limit.
pub fn optimize_ring(tpcu_s: f64, v_avg_um_s: f64, n_repr: usize) -> Result<OptimalShape> {
    let circle = optimize_polygon(tpcu_s, v_avg_um_s, PolygonSides::Unbounded, n_repr)?;
    let r_o = match circle.shape.kind() {
        ShapeKind::RegularPolygon { radius_um, .. } => radius_um,
        _ => unreachable!("polygon optimiser returns a polygon"),
    };
    Ok(OptimalShape { family: ShapeFamily::Ring, shape: ChannelShape::ring(n_repr, 0.0, r_o)?, ..circle })
}

/// Ring objective `0.5 (r_o² − r_i²) cos(π/n) / r_o`.
pub fn ring_objective(n: usize, inner_radius_um: f64, outer_radius_um: f64) -> f64 {
    0.5 * (outer_radius_um.powi(2) - inner_radius_um.powi(2)) / outer_radius_um * (PI / n as f64).cos()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedShape {
    pub shape: ChannelShape,
    pub area_um2: f64,
    pub perimeter_um: f64,
    pub objective_um: f64,
    pub feasible: bool,
}

/// Feasible shapes by descending `A / P`, then infeasible ones (also descending).
pub fn rank_shapes(shapes: &[ChannelShape], tpcu_s: f64, v_avg_um_s: f64) -> Vec<RankedShape> {
    let mut ranked: Vec<RankedShape> = shapes
        .iter()
        .map(|s| RankedShape {
            shape: s.clone(),
            area_um2: s.area(),
            perimeter_um: s.perimeter(),
            objective_um: objective(s),
            feasible: is_feasible(s, tpcu_s, v_avg_um_s),
        })
        .collect();
    ranked.sort_by(|a, b| b.feasible.cmp(&a.feasible).then(b.objective_um.total_cmp(&a.objective_um)));
    ranked
}

/// JSON `{"family":…, "T":…, "v":…, "solution":{…}, "objective_um":…, "constraint_binding":…}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub family: ShapeFamily,
    #[serde(rename = "T")]
    pub tpcu_s: f64,
    #[serde(rename = "v")]
    pub v_avg_um_s: f64,
    pub solution: ChannelShape,
    pub objective_um: f64,
    pub constraint_binding: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub circle_radius_um: Option<f64>,
}

impl OptimizerReport {
    pub fn new(opt: &OptimalShape, tpcu_s: f64, v_avg_um_s: f64) -> Self {
        OptimizerReport {
            family: opt.family,
            tpcu_s,
            v_avg_um_s,
            solution: opt.shape.clone(),
            objective_um: opt.objective_um,
            constraint_binding: opt.binding,
            circle_radius_um: opt.circle_radius_um,
        }
    }
}
