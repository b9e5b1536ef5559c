//! Parametric channel cross-sections.
//!
//! Every shape is centred on the origin. Rectangles are axis aligned with the
//! width along `x`; regular polygons put vertex 0 on the positive `x` axis.
//! Both boundary chains are stored counter-clockwise, so the interior lies to
//! the left of outer edges and to the right of inner (hole) edges.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point-on-edge tolerance in µm. Containment is closed up to this slack.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at `angle` radians from the positive `x` axis.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point { x: c, y: s }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point {
        Point { x: -self.y, y: self.x }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainId {
    Outer,
    Inner,
}

/// Side of a directed edge on which the channel interior lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InteriorSide {
    Left,
    Right,
}

/// Identifies one edge: its chain and its position in stored order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeId {
    pub chain: ChainId,
    pub index: usize,
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.chain {
            ChainId::Outer => 'o',
            ChainId::Inner => 'i',
        };
        write!(f, "{c}{}", self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub start: Point,
    pub end: Point,
    pub interior: InteriorSide,
    pub id: EdgeId,
    // cached
    dir: Point,
    len: f64,
}

impl BoundaryEdge {
    fn new(start: Point, end: Point, interior: InteriorSide, id: EdgeId) -> Self {
        let v = end - start;
        let len = v.norm();
        BoundaryEdge { start, end, interior, id, dir: v * (1.0 / len), len }
    }

    pub fn length(&self) -> f64 {
        self.len
    }

    /// Unit vector from `start` to `end`.
    pub fn direction(&self) -> Point {
        self.dir
    }

    /// Unit normal pointing into the channel.
    pub fn inward_normal(&self) -> Point {
        match self.interior {
            InteriorSide::Left => self.dir.perp(),
            InteriorSide::Right => -self.dir.perp(),
        }
    }

    /// Signed distance to the edge's supporting line, positive on the interior side.
    pub fn signed_distance(&self, p: Point) -> f64 {
        (p - self.start).dot(self.inward_normal())
    }

    /// Point at fraction `t` ∈ [0, 1] from `start`.
    pub fn point_at(&self, t: f64) -> Point {
        self.start + (self.end - self.start) * t
    }

    /// Fraction of the way along the edge of the orthogonal projection of `p`.
    pub fn param_of(&self, p: Point) -> f64 {
        (p - self.start).dot(self.dir) / self.len
    }
}

/// First boundary crossing of a segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitHit {
    pub edge: BoundaryEdge,
    pub hit: Point,
    pub travelled: f64,
}

/// Shape parameters, also the configuration-file shape literal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeKind {
    Rectangle {
        #[serde(rename = "w")]
        width_um: f64,
        #[serde(rename = "l")]
        length_um: f64,
    },
    #[serde(rename = "polygon")]
    RegularPolygon {
        #[serde(rename = "n")]
        sides: usize,
        #[serde(rename = "r")]
        radius_um: f64,
    },
    #[serde(rename = "ring")]
    PolygonRing {
        #[serde(rename = "n")]
        sides: usize,
        #[serde(rename = "r_i")]
        inner_radius_um: f64,
        #[serde(rename = "r_o")]
        outer_radius_um: f64,
    },
}

impl ShapeKind {
    fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: String| if c { Ok(()) } else { Err(Error::InvalidShape(msg)) };
        match *self {
            ShapeKind::Rectangle { width_um: w, length_um: l } => ok(
                w.is_finite() && l.is_finite() && w > 0.0 && l > 0.0,
                format!("rectangle needs w > 0 and l > 0, got w={w}, l={l}"),
            ),
            ShapeKind::RegularPolygon { sides, radius_um: r } => {
                ok(sides >= 3, format!("polygon needs n >= 3, got {sides}"))?;
                ok(r.is_finite() && r > 0.0, format!("polygon needs r > 0, got {r}"))
            }
            ShapeKind::PolygonRing { sides, inner_radius_um: ri, outer_radius_um: ro } => {
                ok(sides >= 3, format!("ring needs n >= 3, got {sides}"))?;
                ok(
                    ri.is_finite() && ro.is_finite() && ri >= 0.0 && ri < ro,
                    format!("ring needs 0 <= r_i < r_o, got r_i={ri}, r_o={ro}"),
                )
            }
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ShapeKind::Rectangle { width_um, length_um } => write!(f, "rect_{width_um}x{length_um}"),
            ShapeKind::RegularPolygon { sides, radius_um } => write!(f, "poly_n{sides}_r{radius_um}"),
            ShapeKind::PolygonRing { sides, inner_radius_um, outer_radius_um } => {
                write!(f, "ring_n{sides}_ri{inner_radius_um}_ro{outer_radius_um}")
            }
        }
    }
}

/// A validated channel cross-section with its explicit polygonal boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShapeKind", into = "ShapeKind")]
pub struct ChannelShape {
    kind: ShapeKind,
    outer: Vec<BoundaryEdge>,
    inner: Vec<BoundaryEdge>,
}

impl TryFrom<ShapeKind> for ChannelShape {
    type Error = Error;
    fn try_from(kind: ShapeKind) -> Result<Self> {
        ChannelShape::new(kind)
    }
}

impl From<ChannelShape> for ShapeKind {
    fn from(s: ChannelShape) -> ShapeKind {
        s.kind
    }
}

impl fmt::Display for ChannelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

fn polygon_vertices(n: usize, r: f64) -> Vec<Point> {
    (0..n).map(|k| Point::from_angle(2.0 * PI * k as f64 / n as f64) * r).collect()
}

fn chain(vertices: &[Point], interior: InteriorSide, chain: ChainId) -> Vec<BoundaryEdge> {
    let n = vertices.len();
    (0..n)
        .map(|i| BoundaryEdge::new(vertices[i], vertices[(i + 1) % n], interior, EdgeId { chain, index: i }))
        .collect()
}

fn polygon_area(sides: usize, radius_um: f64) -> f64 {
    let n = sides as f64;
    0.5 * n * radius_um * radius_um * (2.0 * PI / n).sin()
}

impl ChannelShape {
    pub fn new(kind: ShapeKind) -> Result<Self> {
        kind.validate()?;
        let (outer_v, inner_v) = match kind {
            ShapeKind::Rectangle { width_um: w, length_um: l } => {
                let (hw, hl) = (0.5 * w, 0.5 * l);
                let v = vec![Point::new(-hw, -hl), Point::new(hw, -hl), Point::new(hw, hl), Point::new(-hw, hl)];
                (v, Vec::new())
            }
            ShapeKind::RegularPolygon { sides, radius_um } => (polygon_vertices(sides, radius_um), Vec::new()),
            ShapeKind::PolygonRing { sides, inner_radius_um, outer_radius_um } => {
                let inner = if inner_radius_um > 0.0 { polygon_vertices(sides, inner_radius_um) } else { Vec::new() };
                (polygon_vertices(sides, outer_radius_um), inner)
            }
        };
        Ok(ChannelShape {
            kind,
            outer: chain(&outer_v, InteriorSide::Left, ChainId::Outer),
            inner: chain(&inner_v, InteriorSide::Right, ChainId::Inner),
        })
    }

    pub fn rectangle(width_um: f64, length_um: f64) -> Result<Self> {
        Self::new(ShapeKind::Rectangle { width_um, length_um })
    }

    pub fn polygon(sides: usize, radius_um: f64) -> Result<Self> {
        Self::new(ShapeKind::RegularPolygon { sides, radius_um })
    }

    pub fn ring(sides: usize, inner_radius_um: f64, outer_radius_um: f64) -> Result<Self> {
        Self::new(ShapeKind::PolygonRing { sides, inner_radius_um, outer_radius_um })
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    /// Cross-sectional area in µm².
    pub fn area(&self) -> f64 {
        match self.kind {
            ShapeKind::Rectangle { width_um, length_um } => width_um * length_um,
            ShapeKind::RegularPolygon { sides, radius_um } => polygon_area(sides, radius_um),
            ShapeKind::PolygonRing { sides, inner_radius_um, outer_radius_um } => {
                polygon_area(sides, outer_radius_um) - polygon_area(sides, inner_radius_um)
            }
        }
    }

    /// Perimeter entering the trip model. For rings this is the outer chain only.
    pub fn perimeter(&self) -> f64 {
        match self.kind {
            ShapeKind::Rectangle { width_um, length_um } => 2.0 * width_um + 2.0 * length_um,
            ShapeKind::RegularPolygon { sides, radius_um: r }
            | ShapeKind::PolygonRing { sides, outer_radius_um: r, .. } => {
                let n = sides as f64;
                2.0 * n * r * (PI / n).sin()
            }
        }
    }

    /// Outer plus inner boundary length.
    pub fn total_boundary_length(&self) -> f64 {
        self.outer.iter().chain(&self.inner).map(BoundaryEdge::length).sum()
    }

    /// All boundary edges, outer chain first.
    pub fn edges(&self) -> Vec<BoundaryEdge> {
        self.outer.iter().chain(&self.inner).copied().collect()
    }

    pub fn chain(&self, chain: ChainId) -> &[BoundaryEdge] {
        match chain {
            ChainId::Outer => &self.outer,
            ChainId::Inner => &self.inner,
        }
    }

    pub fn edge(&self, id: EdgeId) -> &BoundaryEdge {
        &self.chain(id.chain)[id.index]
    }

    /// Axis-aligned bounding box `(min, max)` of the outer chain.
    pub fn bounding_box(&self) -> (Point, Point) {
        self.outer.iter().fold(
            (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(lo, hi), e| {
                (
                    Point::new(lo.x.min(e.start.x), lo.y.min(e.start.y)),
                    Point::new(hi.x.max(e.start.x), hi.y.max(e.start.y)),
                )
            },
        )
    }

    /// Smallest characteristic size: the lesser side for rectangles, the band
    /// width for rings, the inscribed diameter for polygons.
    pub fn min_extent(&self) -> f64 {
        match self.kind {
            ShapeKind::Rectangle { width_um, length_um } => width_um.min(length_um),
            ShapeKind::RegularPolygon { sides, radius_um } => 2.0 * radius_um * (PI / sides as f64).cos(),
            ShapeKind::PolygonRing { sides, inner_radius_um, outer_radius_um } => {
                let apothem = (PI / sides as f64).cos();
                if inner_radius_um > 0.0 {
                    (outer_radius_um - inner_radius_um) * apothem
                } else {
                    2.0 * outer_radius_um * apothem
                }
            }
        }
    }

    /// Closed containment with `GEOM_EPS` slack.
    pub fn contains(&self, p: Point) -> bool {
        if let ShapeKind::Rectangle { width_um, length_um } = self.kind {
            return p.x.abs() <= 0.5 * width_um + GEOM_EPS && p.y.abs() <= 0.5 * length_um + GEOM_EPS;
        }
        if !self.outer.iter().all(|e| e.signed_distance(p) >= -GEOM_EPS) {
            return false;
        }
        // open hole: strictly on the hole side of every inner edge
        self.inner.is_empty() || !self.inner.iter().all(|e| e.signed_distance(p) < -GEOM_EPS)
    }

    /// First boundary edge crossed when moving in a straight line from `from`
    /// (inside the channel) to `to`. `None` when the open segment stays inside.
    ///
    /// A start point lying on the boundary only produces a zero-length hit
    /// when the direction of motion actually leaves the channel there.
    pub fn first_exit(&self, from: Point, to: Point) -> Option<ExitHit> {
        let d = to - from;
        let len = d.norm();
        if len == 0.0 {
            return None;
        }
        let u = d * (1.0 / len);

        let mut best: Option<ExitHit> = None;
        let consider = |e: &BoundaryEdge, best: &mut Option<ExitHit>| {
            let rate = u.dot(e.inward_normal());
            if rate >= 0.0 {
                return;
            }
            // a line already crossed lies behind a point that is inside the channel
            let sd = e.signed_distance(from);
            if sd < -GEOM_EPS {
                return;
            }
            let s = sd.max(0.0) / -rate;
            if s >= len || best.is_some_and(|b| b.travelled <= s) {
                return;
            }
            let hit = from + u * s;
            let q = e.param_of(hit);
            let q_tol = GEOM_EPS / e.len;
            if q < -q_tol || q > 1.0 + q_tol {
                return;
            }
            if s * -rate <= GEOM_EPS && e.id.chain == ChainId::Inner && !self.enters_hole_at(from, u) {
                return;
            }
            *best = Some(ExitHit { edge: *e, hit: e.point_at(q.clamp(0.0, 1.0)), travelled: s });
        };

        // Outer chain is convex: a segment whose endpoint is strictly inside
        // every outer half-plane cannot cross it.
        let outer_clear = match self.kind {
            ShapeKind::Rectangle { width_um, length_um } => {
                to.x.abs() < 0.5 * width_um - GEOM_EPS
                    && to.y.abs() < 0.5 * length_um - GEOM_EPS
                    && from.x.abs() < 0.5 * width_um - GEOM_EPS
                    && from.y.abs() < 0.5 * length_um - GEOM_EPS
            }
            _ => false,
        };
        if !outer_clear {
            for e in &self.outer {
                consider(e, &mut best);
            }
        }
        if let ShapeKind::PolygonRing { inner_radius_um, .. } = self.kind {
            if inner_radius_um > 0.0 && point_segment_distance(Point::ORIGIN, from, to) <= inner_radius_um + GEOM_EPS {
                for e in &self.inner {
                    consider(e, &mut best);
                }
            }
        }

        best.map(|mut b| {
            if b.travelled < 0.0 {
                b.travelled = 0.0;
            }
            b
        })
    }

    /// Whether moving from boundary point `p` along unit `u` enters the hole.
    fn enters_hole_at(&self, p: Point, u: Point) -> bool {
        self.inner.iter().filter(|e| e.signed_distance(p) >= -GEOM_EPS).all(|e| u.dot(e.inward_normal()) < 0.0)
    }
}
