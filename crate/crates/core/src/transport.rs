//! Transmission and receiver zones, particle loading and a full channel use.
//!
//! The transmission zone is a grid of particle-sized cells hugging the left
//! wall; the receiver zone is a band of the same depth along the right wall.
//! Both are anchored on the outer chain.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, ChainId, ChannelShape, Point, GEOM_EPS};
use crate::motility::{self, MotilityParams, MtPose};

/// Default per-MT load capacity.
pub const DEFAULT_MAX_LOAD: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZoneConfig {
    pub particle_diameter_um: f64,
    pub zone_depth_um: f64,
    pub zone_arc_fraction: f64,
    pub min_separation_um: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        ZoneConfig { particle_diameter_um: 1.0, zone_depth_um: 2.0, zone_arc_fraction: 0.25, min_separation_um: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCell {
    pub i: i64,
    pub j: i64,
}

/// A stretch of the outer boundary, stored as a polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryArc {
    points: Vec<Point>,
}

impl BoundaryArc {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.points.windows(2).map(|w| point_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min)
    }

    fn bbox(&self, pad: f64) -> (Point, Point) {
        let (mut lo, mut hi) =
            (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &self.points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (Point::new(lo.x - pad, lo.y - pad), Point::new(hi.x + pad, hi.y + pad))
    }
}

/// Arc-length parametrisation of the outer chain starting at vertex 0.
struct OuterChain {
    vertices: Vec<Point>,
    cumulative: Vec<f64>,
    perimeter: f64,
}

impl OuterChain {
    fn new(shape: &ChannelShape) -> Self {
        let edges = shape.chain(ChainId::Outer);
        let mut cumulative = Vec::with_capacity(edges.len() + 1);
        let mut s = 0.0;
        for e in edges {
            cumulative.push(s);
            s += e.length();
        }
        cumulative.push(s);
        OuterChain { vertices: edges.iter().map(|e| e.start).collect(), cumulative, perimeter: s }
    }

    fn n(&self) -> usize {
        self.vertices.len()
    }

    fn point_at(&self, s: f64) -> Point {
        let s = s.rem_euclid(self.perimeter);
        let k = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(k) => k.min(self.n() - 1),
            Err(k) => k - 1,
        };
        let (a, b) = (self.vertices[k], self.vertices[(k + 1) % self.n()]);
        let t = (s - self.cumulative[k]) / (self.cumulative[k + 1] - self.cumulative[k]);
        a + (b - a) * t
    }

    /// Arc-length position of the extreme boundary point in direction `sign` along x
    /// (−1 leftmost, +1 rightmost). A tied pair of vertices resolves to the edge midpoint.
    fn extreme(&self, sign: f64) -> f64 {
        let best = self.vertices.iter().map(|v| sign * v.x).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..self.n()).filter(|&k| sign * self.vertices[k].x >= best - 1e-9).collect();
        match tied.as_slice() {
            [k] => self.cumulative[*k],
            [a, b] if *b == a + 1 => self.cumulative[*a] + 0.5 * (self.cumulative[*b] - self.cumulative[*a]),
            [0, b] if *b == self.n() - 1 => self.cumulative[*b] + 0.5 * (self.perimeter - self.cumulative[*b]),
            _ => self.cumulative[tied[0]],
        }
    }

    fn arc(&self, centre: f64, length: f64) -> BoundaryArc {
        let (a, b) = (centre - 0.5 * length, centre + 0.5 * length);
        let mut interior: Vec<f64> = Vec::new();
        for m in -1..=2 {
            for k in 0..self.n() {
                let s = self.cumulative[k] + m as f64 * self.perimeter;
                if s > a && s < b {
                    interior.push(s);
                }
            }
        }
        interior.sort_by(f64::total_cmp);
        let mut points = vec![self.point_at(a)];
        points.extend(interior.into_iter().map(|s| self.point_at(s)));
        points.push(self.point_at(b));
        BoundaryArc { points }
    }
}

/// Whether segment `a`–`b` has a positive-length piece strictly inside the open box.
fn segment_enters_open_box(a: Point, b: Point, lo: Point, hi: Point) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x - lo.x), (d.x, hi.x - a.x), (-d.y, a.y - lo.y), (d.y, hi.y - a.y)] {
        if p == 0.0 {
            if q <= 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    t1 - t0 > 1e-12
}

#[derive(Clone, Debug)]
pub struct ZoneLayout {
    config: ZoneConfig,
    origin: Point,
    tx_cells: Vec<GridCell>,
    lookup_lo: GridCell,
    lookup_dims: (usize, usize),
    lookup: Vec<u32>,
    tx_arc: BoundaryArc,
    rx_arc: BoundaryArc,
    rx_bbox: (Point, Point),
    gap_um: f64,
}

const NO_CELL: u32 = u32::MAX;

impl ZoneLayout {
    pub fn config(&self) -> &ZoneConfig {
        &self.config
    }

    pub fn tx_cells(&self) -> &[GridCell] {
        &self.tx_cells
    }

    pub fn tx_capacity(&self) -> usize {
        self.tx_cells.len()
    }

    pub fn tx_arc(&self) -> &BoundaryArc {
        &self.tx_arc
    }

    pub fn rx_arc(&self) -> &BoundaryArc {
        &self.rx_arc
    }

    /// Shortest boundary distance between the two zone arcs.
    pub fn zone_gap_um(&self) -> f64 {
        self.gap_um
    }

    pub fn cell_of(&self, p: Point) -> GridCell {
        let d = self.config.particle_diameter_um;
        GridCell { i: ((p.x - self.origin.x) / d).floor() as i64, j: ((p.y - self.origin.y) / d).floor() as i64 }
    }

    pub fn cell_center(&self, c: GridCell) -> Point {
        let d = self.config.particle_diameter_um;
        Point::new(self.origin.x + (c.i as f64 + 0.5) * d, self.origin.y + (c.j as f64 + 0.5) * d)
    }

    /// Index into [`tx_cells`](Self::tx_cells) of the cell holding `p`, if it is a zone cell.
    pub fn tx_cell_index(&self, p: Point) -> Option<usize> {
        let c = self.cell_of(p);
        let (di, dj) = (c.i - self.lookup_lo.i, c.j - self.lookup_lo.j);
        if di < 0 || dj < 0 || di as usize >= self.lookup_dims.0 || dj as usize >= self.lookup_dims.1 {
            return None;
        }
        match self.lookup[di as usize * self.lookup_dims.1 + dj as usize] {
            NO_CELL => None,
            k => Some(k as usize),
        }
    }

    pub fn in_tx(&self, p: Point) -> bool {
        self.tx_cell_index(p).is_some()
    }

    pub fn in_rx(&self, p: Point) -> bool {
        let (lo, hi) = self.rx_bbox;
        p.x >= lo.x
            && p.x <= hi.x
            && p.y >= lo.y
            && p.y <= hi.y
            && self.rx_arc.distance(p) <= self.config.zone_depth_um + GEOM_EPS
    }
}

/// Lays out the transmission grid on the left wall and the receiver band on the right wall.
pub fn build_zones(shape: &ChannelShape, config: ZoneConfig) -> Result<ZoneLayout> {
    let ZoneConfig { particle_diameter_um: d, zone_depth_um: depth, zone_arc_fraction: frac, min_separation_um } =
        config;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter(format!("particle_diameter_um = {d}")));
    }
    if !(depth.is_finite() && depth > 0.0) {
        return Err(Error::InvalidParameter(format!("zone_depth_um = {depth}")));
    }
    if !(frac.is_finite() && frac > 0.0) {
        return Err(Error::InfeasibleLayout(format!("zone_arc_fraction = {frac} gives empty zones")));
    }
    if !(min_separation_um.is_finite() && min_separation_um >= 0.0) {
        return Err(Error::InvalidParameter(format!("min_separation_um = {min_separation_um}")));
    }

    let chain = OuterChain::new(shape);
    let perimeter = chain.perimeter;
    let arc_len = frac * perimeter;
    let (s_tx, s_rx) = (chain.extreme(-1.0), chain.extreme(1.0));
    let along = (s_rx - s_tx).rem_euclid(perimeter);
    let gap_um = (along - arc_len).min(perimeter - along - arc_len);
    if gap_um < min_separation_um {
        return Err(Error::InfeasibleLayout(format!(
            "zones of arc {arc_len:.3} µm leave a gap of {gap_um:.3} µm on {shape}, below the {min_separation_um} µm separation"
        )));
    }

    let tx_arc = chain.arc(s_tx, arc_len);
    let rx_arc = chain.arc(s_rx, arc_len);
    let origin = chain.point_at(s_tx);

    let probe = ZoneLayout {
        config,
        origin,
        tx_cells: Vec::new(),
        lookup_lo: GridCell { i: 0, j: 0 },
        lookup_dims: (0, 0),
        lookup: Vec::new(),
        tx_arc,
        rx_arc: rx_arc.clone(),
        rx_bbox: rx_arc.bbox(depth + GEOM_EPS),
        gap_um,
    };

    let (lo, hi) = probe.tx_arc.bbox(depth + d);
    let (c_lo, c_hi) = (probe.cell_of(lo), probe.cell_of(hi));
    let edges = shape.edges();
    let mut cells = Vec::new();
    for i in c_lo.i..=c_hi.i {
        for j in c_lo.j..=c_hi.j {
            let cell = GridCell { i, j };
            let centre = probe.cell_center(cell);
            if probe.tx_arc.distance(centre) > depth + GEOM_EPS {
                continue;
            }
            let half = Point::new(0.5 * d, 0.5 * d);
            let (blo, bhi) = (centre - half, centre + half);
            let overlaps =
                shape.contains(centre) || edges.iter().any(|e| segment_enters_open_box(e.start, e.end, blo, bhi));
            if overlaps {
                if probe.in_rx(centre) {
                    return Err(Error::InfeasibleLayout(format!(
                        "transmission cell {cell:?} falls inside the receiver band"
                    )));
                }
                cells.push(cell);
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::InfeasibleLayout(format!("no transmission cells fit on {shape}")));
    }

    let lookup_lo = GridCell { i: c_lo.i, j: c_lo.j };
    let dims = ((c_hi.i - c_lo.i + 1) as usize, (c_hi.j - c_lo.j + 1) as usize);
    let mut lookup = vec![NO_CELL; dims.0 * dims.1];
    for (k, c) in cells.iter().enumerate() {
        lookup[(c.i - lookup_lo.i) as usize * dims.1 + (c.j - lookup_lo.j) as usize] = k as u32;
    }
    Ok(ZoneLayout { tx_cells: cells, lookup_lo, lookup_dims: dims, lookup, ..probe })
}

pub type ParticleId = u32;

/// Which particle, if any, sits in each transmission cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occupancy {
    cells: Vec<Option<ParticleId>>,
    count: usize,
}

impl Occupancy {
    pub fn empty(n_cells: usize) -> Self {
        Occupancy { cells: vec![None; n_cells], count: 0 }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn get(&self, cell: usize) -> Option<ParticleId> {
        self.cells[cell]
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter_map(|(k, c)| c.map(|_| k))
    }

    pub fn take(&mut self, cell: usize) -> Option<ParticleId> {
        let p = self.cells[cell].take();
        if p.is_some() {
            self.count -= 1;
        }
        p
    }
}

/// Places `x` particles in distinct cells chosen uniformly without replacement.
pub fn place_particles<R: Rng + ?Sized>(layout: &ZoneLayout, x: usize, rng: &mut R) -> Result<Occupancy> {
    let n = layout.tx_capacity();
    if x > n {
        return Err(Error::ZoneCapacity { requested: x, capacity: n });
    }
    let mut occ = Occupancy::empty(n);
    for (id, cell) in index::sample(rng, n, x).into_iter().enumerate() {
        occ.cells[cell] = Some(id as ParticleId);
    }
    occ.count = x;
    Ok(occ)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CargoState {
    pub loaded: Vec<ParticleId>,
    pub max_load: usize,
}

impl CargoState {
    pub fn new(max_load: usize) -> Self {
        CargoState { loaded: Vec::with_capacity(max_load), max_load }
    }

    pub fn is_full(&self) -> bool {
        self.loaded.len() >= self.max_load
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripPhase {
    NeedTx,
    NeedRx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TripCounter {
    pub phase: TripPhase,
    pub completed: u32,
}

impl Default for TripCounter {
    fn default() -> Self {
        TripCounter { phase: TripPhase::NeedTx, completed: 0 }
    }
}

impl TripCounter {
    /// Records a zone visit: transmission arms the counter, a receiver visit
    /// after that completes a trip.
    pub fn visit(&mut self, in_tx: bool, in_rx: bool) {
        if in_tx {
            self.phase = TripPhase::NeedRx;
        } else if in_rx && self.phase == TripPhase::NeedRx {
            self.completed += 1;
            self.phase = TripPhase::NeedTx;
        }
    }
}

/// One microtubule with its own random stream.
#[derive(Clone, Debug)]
pub struct Carrier {
    pub pose: MtPose,
    pub cargo: CargoState,
    pub trips: TripCounter,
    rng: ChaCha8Rng,
}

impl Carrier {
    pub fn new(pose: MtPose, max_load: usize, rng: ChaCha8Rng) -> Self {
        Carrier { pose, cargo: CargoState::new(max_load), trips: TripCounter::default(), rng }
    }
}

/// Loading, unloading and trip bookkeeping for a head already moved to its
/// new position. Returns the number of particles delivered.
pub fn apply_zone_rules(
    layout: &ZoneLayout,
    pose: &MtPose,
    cargo: &mut CargoState,
    trips: &mut TripCounter,
    occupancy: &mut Occupancy,
) -> usize {
    let cell = layout.tx_cell_index(pose.position);
    let in_rx = cell.is_none() && layout.in_rx(pose.position);
    trips.visit(cell.is_some(), in_rx);
    if let Some(k) = cell {
        if !cargo.is_full() {
            if let Some(p) = occupancy.take(k) {
                cargo.loaded.push(p);
            }
        }
        0
    } else if in_rx {
        let n = cargo.loaded.len();
        cargo.loaded.clear();
        n
    } else {
        0
    }
}

/// Advances every carrier one step and applies the zone rules. Returns deliveries this step.
pub fn step_transport(
    shape: &ChannelShape,
    layout: &ZoneLayout,
    carriers: &mut [Carrier],
    occupancy: &mut Occupancy,
    params: &MotilityParams,
) -> usize {
    carriers
        .iter_mut()
        .map(|c| {
            c.pose = motility::advance(shape, &c.pose, params, &mut c.rng);
            apply_zone_rules(layout, &c.pose, &mut c.cargo, &mut c.trips, occupancy)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelUseResult {
    pub delivered: usize,
    pub per_mt_trips: Vec<u32>,
    pub particles_remaining: usize,
    pub particles_in_transit: usize,
    pub rng_seed: u64,
}

/// Number of Δt steps in a channel use of `tpcu_s` seconds.
pub fn steps_for(tpcu_s: f64, dt_s: f64) -> usize {
    (tpcu_s / dt_s + 1e-9).floor() as usize
}

/// A channel use that can be driven one step at a time.
#[derive(Clone, Debug)]
pub struct ChannelUse<'a> {
    shape: &'a ChannelShape,
    layout: &'a ZoneLayout,
    params: MotilityParams,
    carriers: Vec<Carrier>,
    occupancy: Occupancy,
    delivered: usize,
    released: usize,
    seed: u64,
}

impl<'a> ChannelUse<'a> {
    /// Stream 0 of the seed places particles; stream `k + 1` drives MT `k`.
    pub fn new(
        shape: &'a ChannelShape,
        layout: &'a ZoneLayout,
        x: usize,
        params: MotilityParams,
        mt_count: usize,
        max_load: usize,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let mut placement = ChaCha8Rng::seed_from_u64(seed);
        let occupancy = place_particles(layout, x, &mut placement)?;
        let carriers = (0..mt_count)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64 + 1);
                let pose = motility::random_pose(shape, &mut rng);
                Carrier::new(pose, max_load, rng)
            })
            .collect();
        Ok(ChannelUse { shape, layout, params, carriers, occupancy, delivered: 0, released: x, seed })
    }

    pub fn step(&mut self) -> usize {
        let n = step_transport(self.shape, self.layout, &mut self.carriers, &mut self.occupancy, &self.params);
        self.delivered += n;
        n
    }

    pub fn carriers(&self) -> &[Carrier] {
        &self.carriers
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occupancy
    }

    pub fn delivered(&self) -> usize {
        self.delivered
    }

    pub fn released(&self) -> usize {
        self.released
    }

    pub fn in_transit(&self) -> usize {
        self.carriers.iter().map(|c| c.cargo.loaded.len()).sum()
    }

    pub fn remaining(&self) -> usize {
        self.occupancy.count()
    }

    pub fn finish(self) -> ChannelUseResult {
        ChannelUseResult {
            delivered: self.delivered,
            per_mt_trips: self.carriers.iter().map(|c| c.trips.completed).collect(),
            particles_remaining: self.occupancy.count(),
            particles_in_transit: self.carriers.iter().map(|c| c.cargo.loaded.len()).sum(),
            rng_seed: self.seed,
        }
    }
}

/// Simulates one channel use of `x` released particles over `tpcu_s` seconds.
#[allow(clippy::too_many_arguments)]
pub fn run_channel_use(
    shape: &ChannelShape,
    layout: &ZoneLayout,
    x: usize,
    tpcu_s: f64,
    params: &MotilityParams,
    mt_count: usize,
    max_load: usize,
    seed: u64,
) -> Result<ChannelUseResult> {
    if !(tpcu_s.is_finite() && tpcu_s > 0.0) {
        return Err(Error::InvalidParameter(format!("tpcu_s = {tpcu_s}")));
    }
    let mut cu = ChannelUse::new(shape, layout, x, *params, mt_count, max_load, seed)?;
    for _ in 0..steps_for(tpcu_s, params.dt_s) {
        cu.step();
    }
    Ok(cu.finish())
}

/// ⌊A·h·C⌋ with 1 µm³ = 1 fL.
pub fn mt_count_for(shape: &ChannelShape, height_um: f64, concentration_per_fl: f64) -> usize {
    let m = shape.area() * height_um * concentration_per_fl;
    (m + 1e-9).floor().max(0.0) as usize
}

/// One line of the raw trial log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub x: usize,
    pub y: usize,
    pub trips: Vec<u32>,
    pub seed: u64,
}

impl TrialRecord {
    pub fn from_result(x: usize, r: &ChannelUseResult) -> Self {
        TrialRecord { x, y: r.delivered, trips: r.per_mt_trips.clone(), seed: r.rng_seed }
    }
}
