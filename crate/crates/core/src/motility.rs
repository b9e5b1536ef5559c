//! Gliding-assay motion of a microtubule head point.
//!
//! Each step draws a Gaussian step length and a Gaussian heading increment,
//! rotates, then moves. Walls are a hard constraint: on contact the head
//! snaps onto the boundary and spends the rest of the step sliding along it.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryEdge, ChannelShape, EdgeId, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotilityParams {
    pub dt_s: f64,
    pub v_avg_um_s: f64,
    pub diffusion_um2_s: f64,
    pub persistence_um: f64,
}

impl Default for MotilityParams {
    fn default() -> Self {
        MotilityParams { dt_s: 0.1, v_avg_um_s: 0.5, diffusion_um2_s: 2.0e-3, persistence_um: 111.0 }
    }
}

impl MotilityParams {
    /// `D = 0` and `L_p = ∞` are accepted; they give the deterministic limit.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.dt_s.is_finite() && self.dt_s > 0.0) {
            return bad("dt_s", self.dt_s);
        }
        if !(self.v_avg_um_s.is_finite() && self.v_avg_um_s > 0.0) {
            return bad("v_avg_um_s", self.v_avg_um_s);
        }
        if !(self.diffusion_um2_s.is_finite() && self.diffusion_um2_s >= 0.0) {
            return bad("diffusion_um2_s", self.diffusion_um2_s);
        }
        if self.persistence_um.is_nan() || self.persistence_um <= 0.0 {
            return bad("persistence_um", self.persistence_um);
        }
        Ok(())
    }

    /// Deterministic variant: same speed, no diffusion, infinite persistence.
    pub fn deterministic(self) -> Self {
        MotilityParams { diffusion_um2_s: 0.0, persistence_um: f64::INFINITY, ..self }
    }

    pub fn step_mean(&self) -> f64 {
        self.v_avg_um_s * self.dt_s
    }

    pub fn step_variance(&self) -> f64 {
        2.0 * self.diffusion_um2_s * self.dt_s
    }

    pub fn heading_variance(&self) -> f64 {
        self.v_avg_um_s * self.dt_s / self.persistence_um
    }

    /// Warning text when the mean step exceeds 10% of the shape's smallest extent.
    pub fn resolution_warning(&self, shape: &ChannelShape) -> Option<String> {
        let extent = shape.min_extent();
        (self.step_mean() > 0.1 * extent).then(|| {
            format!(
                "mean step {:.4} µm exceeds 10% of the smallest extent {:.4} µm of {shape}",
                self.step_mean(),
                extent
            )
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WallMode {
    Free,
    Following(EdgeId),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MtPose {
    pub position: Point,
    pub heading_rad: f64,
    pub wall_mode: WallMode,
}

impl MtPose {
    pub fn free(position: Point, heading_rad: f64) -> Self {
        MtPose { position, heading_rad: normalize_angle(heading_rad), wall_mode: WallMode::Free }
    }

    pub fn on_wall(&self) -> bool {
        matches!(self.wall_mode, WallMode::Following(_))
    }
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub dr: f64,
    pub dtheta: f64,
}

/// Draws one step: the length first, then the heading increment.
pub fn sample_step<R: Rng + ?Sized>(params: &MotilityParams, rng: &mut R) -> Step {
    let z_r: f64 = rng.sample(StandardNormal);
    let z_t: f64 = rng.sample(StandardNormal);
    Step {
        dr: params.step_mean() + params.step_variance().sqrt() * z_r,
        dtheta: params.heading_variance().sqrt() * z_t,
    }
}

/// Uniform position over the cross-section, uniform heading.
pub fn random_pose<R: Rng + ?Sized>(shape: &ChannelShape, rng: &mut R) -> MtPose {
    let (lo, hi) = shape.bounding_box();
    let position = loop {
        let q = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if shape.contains(q) {
            break q;
        }
    };
    let heading = PI - 2.0 * PI * rng.random::<f64>();
    MtPose::free(position, heading)
}

pub fn advance<R: Rng + ?Sized>(shape: &ChannelShape, pose: &MtPose, params: &MotilityParams, rng: &mut R) -> MtPose {
    apply_step(shape, pose, sample_step(params, rng)).0
}

/// Deterministic core of [`advance`]. Returns the new pose and the distance
/// actually covered, which equals `max(step.dr, 0)`.
pub fn apply_step(shape: &ChannelShape, pose: &MtPose, step: Step) -> (MtPose, f64) {
    let theta = normalize_angle(pose.heading_rad + step.dtheta);
    let dr = step.dr.max(0.0);
    let u = Point::from_angle(theta);
    match pose.wall_mode {
        WallMode::Following(id) if u.dot(shape.edge(id).inward_normal()) <= 0.0 => {
            let e = shape.edge(id);
            let dir = travel_direction(e, u);
            let q = e.param_of(pose.position).clamp(0.0, 1.0);
            slide(shape, id, q, dir, dr, theta)
        }
        _ => free_move(shape, pose.position, theta, dr),
    }
}

fn free_move(shape: &ChannelShape, from: Point, theta: f64, dr: f64) -> (MtPose, f64) {
    let to = from + Point::from_angle(theta) * dr;
    match shape.first_exit(from, to) {
        None => (MtPose { position: to, heading_rad: theta, wall_mode: WallMode::Free }, dr),
        Some(hit) => {
            let e = hit.edge;
            let dir = travel_direction(&e, Point::from_angle(theta));
            let q = e.param_of(hit.hit).clamp(0.0, 1.0);
            let (pose, walked) = slide(shape, e.id, q, dir, dr - hit.travelled, tangent_angle(&e, dir));
            (pose, hit.travelled + walked)
        }
    }
}

/// +1 along stored chain order, −1 against it; exact perpendicular goes counter-clockwise.
fn travel_direction(e: &BoundaryEdge, u: Point) -> i8 {
    if u.dot(e.direction()) >= 0.0 {
        1
    } else {
        -1
    }
}

fn tangent_angle(e: &BoundaryEdge, dir: i8) -> f64 {
    let t = if dir > 0 { e.direction() } else { -e.direction() };
    t.angle()
}

/// Spends `distance` along the boundary chain starting at fraction `q` of edge `id`.
/// Turning onto a new edge resets the heading to that edge's travel tangent.
fn slide(shape: &ChannelShape, id: EdgeId, mut q: f64, dir: i8, distance: f64, theta: f64) -> (MtPose, f64) {
    let chain = shape.chain(id.chain);
    let n = chain.len();
    let mut index = id.index;
    let mut remaining = distance.max(0.0);
    let mut walked = 0.0;
    let mut heading = theta;
    loop {
        let e = &chain[index];
        let avail = if dir > 0 { (1.0 - q) * e.length() } else { q * e.length() };
        if remaining <= avail {
            q += f64::from(dir) * remaining / e.length();
            walked += remaining;
            break;
        }
        remaining -= avail;
        walked += avail;
        index = if dir > 0 { (index + 1) % n } else { (index + n - 1) % n };
        q = if dir > 0 { 0.0 } else { 1.0 };
        heading = tangent_angle(&chain[index], dir);
    }
    let e = &chain[index];
    let pose = MtPose {
        position: e.point_at(q.clamp(0.0, 1.0)),
        heading_rad: normalize_angle(heading),
        wall_mode: WallMode::Following(e.id),
    };
    (pose, walked)
}

/// `n_steps + 1` poses starting with `start`.
pub fn simulate_path<R: Rng + ?Sized>(
    shape: &ChannelShape,
    start: MtPose,
    params: &MotilityParams,
    n_steps: usize,
    rng: &mut R,
) -> Vec<MtPose> {
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(start);
    let mut pose = start;
    for _ in 0..n_steps {
        pose = advance(shape, &pose, params, rng);
        path.push(pose);
    }
    path
}

/// CSV rows `step,t_s,x_um,y_um,theta_rad,wall_mode`.
pub fn write_path_csv<W: Write>(mut out: W, path: &[MtPose], dt_s: f64) -> io::Result<()> {
    writeln!(out, "step,t_s,x_um,y_um,theta_rad,wall_mode")?;
    for (i, p) in path.iter().enumerate() {
        let mode = match p.wall_mode {
            WallMode::Free => "free".to_string(),
            WallMode::Following(id) => format!("following:{id}"),
        };
        writeln!(out, "{i},{},{},{},{},{mode}", i as f64 * dt_s, p.position.x, p.position.y, p.heading_rad)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChainId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square40() -> ChannelShape {
        ChannelShape::rectangle(40.0, 40.0).unwrap()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn step_moments_match_model() {
        let params = MotilityParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (dr, dt): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| {
                let s = sample_step(&params, &mut rng);
                (s.dr, s.dtheta)
            })
            .unzip();
        let (m, v) = mean_var(&dr);
        let se = (4.0e-4f64 / n as f64).sqrt();
        assert!((m - 0.05).abs() < 3.0 * se, "mean {m}");
        // Var of sample variance for a Gaussian: 2σ⁴/(n−1)
        let se_v = (2.0 * 4.0e-4f64.powi(2) / n as f64).sqrt();
        assert!((v - 4.0e-4).abs() < 3.0 * se_v, "var {v}");

        let target = 0.5 * 0.1 / 111.0;
        assert!((params.heading_variance() - 4.504504504e-4).abs() < 1e-12);
        let (mt, vt) = mean_var(&dt);
        assert!(mt.abs() < 3.0 * (target / n as f64).sqrt());
        assert!((vt - target).abs() < 3.0 * (2.0 * target * target / n as f64).sqrt(), "{vt}");
    }

    #[test]
    fn deterministic_limit_is_exact() {
        let params = MotilityParams::default().deterministic();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let s = sample_step(&params, &mut rng);
            assert_eq!(s.dr, params.step_mean());
            assert_eq!(s.dtheta, 0.0);
        }
    }

    #[test]
    fn straight_line_until_wall() {
        let params = MotilityParams::default().deterministic();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = simulate_path(&square40(), MtPose::free(Point::ORIGIN, 0.0), &params, 100, &mut rng);
        for (k, pose) in path.iter().enumerate() {
            assert!((pose.position.x - k as f64 * 0.05).abs() < 1e-12);
            assert_eq!(pose.position.y, 0.0);
            assert!(!pose.on_wall());
        }
    }

    #[test]
    fn single_step_into_wall() {
        let shape = square40();
        let start = MtPose::free(Point::new(19.99, 0.0), 0.0);
        let (pose, travelled) = apply_step(&shape, &start, Step { dr: 0.05, dtheta: 0.0 });
        assert!((travelled - 0.05).abs() < 1e-15);
        // perpendicular tie goes counter-clockwise, i.e. +y on the right wall
        assert!((pose.position.x - 20.0).abs() < 1e-12);
        assert!((pose.position.y - 0.04).abs() < 1e-12, "{:?}", pose.position);
        assert_eq!(pose.wall_mode, WallMode::Following(EdgeId { chain: ChainId::Outer, index: 1 }));
        assert!((pose.heading_rad - PI / 2.0).abs() < 1e-12);

        // fine substep oracle: walk straight in 1e-5 increments until outside, then along the wall
        let mut x = 19.99;
        let mut spent = 0.0;
        while x + 1e-5 <= 20.0 + 1e-12 {
            x += 1e-5;
            spent += 1e-5;
        }
        let y = 0.05 - spent;
        assert!((pose.position.y - y).abs() < 2e-5);

        // heading slightly below +x picks −y
        let start = MtPose::free(Point::new(19.99, 0.0), -0.01);
        let (pose, _) = apply_step(&shape, &start, Step { dr: 0.05, dtheta: 0.0 });
        assert!(pose.position.y < 0.0);
    }

    #[test]
    fn corner_transit_turns_onto_next_edge() {
        let shape = square40();
        let bottom = EdgeId { chain: ChainId::Outer, index: 0 };
        let start =
            MtPose { position: Point::new(19.98, -20.0), heading_rad: -0.001, wall_mode: WallMode::Following(bottom) };
        let (pose, travelled) = apply_step(&shape, &start, Step { dr: 0.05, dtheta: 0.0 });
        assert!((travelled - 0.05).abs() < 1e-12);
        assert_eq!(pose.wall_mode, WallMode::Following(EdgeId { chain: ChainId::Outer, index: 1 }));
        assert!((pose.position.x - 20.0).abs() < 1e-12);
        assert!((pose.position.y - (-20.0 + 0.03)).abs() < 1e-12);
        assert!((pose.heading_rad - PI / 2.0).abs() < 1e-12);
        // and keeps going around instead of bouncing back
        let (next, _) = apply_step(&shape, &pose, Step { dr: 0.05, dtheta: -0.001 });
        assert!(next.position.y > pose.position.y);
    }

    #[test]
    fn detaches_when_heading_points_inward() {
        let shape = square40();
        let bottom = EdgeId { chain: ChainId::Outer, index: 0 };
        let start =
            MtPose { position: Point::new(0.0, -20.0), heading_rad: 0.0, wall_mode: WallMode::Following(bottom) };
        let (pose, _) = apply_step(&shape, &start, Step { dr: 0.05, dtheta: 0.1 });
        assert_eq!(pose.wall_mode, WallMode::Free);
        assert!(pose.position.y > -20.0);
        let (pose, _) = apply_step(&shape, &start, Step { dr: 0.05, dtheta: -0.1 });
        assert!(pose.on_wall());
        assert_eq!(pose.position.y, -20.0);
        // heading memory persists along the edge
        assert!((pose.heading_rad + 0.1).abs() < 1e-12);
    }

    #[test]
    fn negative_step_is_clamped() {
        let shape = square40();
        let start = MtPose::free(Point::new(1.0, 2.0), 0.3);
        let (pose, travelled) = apply_step(&shape, &start, Step { dr: -0.01, dtheta: 0.2 });
        assert_eq!(travelled, 0.0);
        assert_eq!(pose.position, start.position);
        assert!((pose.heading_rad - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_returns_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start = MtPose::free(Point::ORIGIN, 1.0);
        let path = simulate_path(&square40(), start, &MotilityParams::default(), 0, &mut rng);
        assert_eq!(path, vec![start]);
    }

    #[test]
    fn free_path_statistics() {
        let shape = ChannelShape::rectangle(1.0e5, 1.0e5).unwrap();
        let params = MotilityParams::default();
        let steps = 10_000;
        let mut speeds = Vec::new();
        let mut sq_drift = 0.0;
        let runs = 200;
        for seed in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = simulate_path(&shape, MtPose::free(Point::ORIGIN, 0.0), &params, steps, &mut rng);
            let dist: f64 = path.windows(2).map(|w| w[0].position.distance(w[1].position)).sum();
            speeds.push(dist / (steps as f64 * params.dt_s));
            sq_drift += path[steps].heading_rad.powi(2);
        }
        let mean_speed = speeds.iter().sum::<f64>() / runs as f64;
        assert!((mean_speed - 0.5).abs() < 0.025, "{mean_speed}");

        // heading stays well inside (−π, π] for 100 steps; compare summed variance there
        let k = 100;
        let mut drift = 0.0;
        for seed in 0..4000 {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
            let path = simulate_path(&shape, MtPose::free(Point::ORIGIN, 0.0), &params, k, &mut rng);
            drift += path[k].heading_rad.powi(2);
        }
        let expected = k as f64 * params.heading_variance();
        let got = drift / 4000.0;
        assert!((got - expected).abs() < 0.1 * expected, "{got} vs {expected}");
        assert!(sq_drift.is_finite());
    }

    #[test]
    fn paths_are_deterministic_and_contained() {
        for shape in [
            square40(),
            ChannelShape::polygon(5, 8.0).unwrap(),
            ChannelShape::ring(8, 20.0, 25.0).unwrap(),
            ChannelShape::ring(3, 2.0, 9.0).unwrap(),
        ] {
            let params = MotilityParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let start = random_pose(&shape, &mut rng);
            let a = simulate_path(&shape, start, &params, 20_000, &mut ChaCha8Rng::seed_from_u64(5));
            let b = simulate_path(&shape, start, &params, 20_000, &mut ChaCha8Rng::seed_from_u64(5));
            assert_eq!(a, b);
            assert!(a.iter().all(|p| shape.contains(p.position)), "{shape}");
            assert!(a.iter().all(|p| p.heading_rad > -PI && p.heading_rad <= PI));
        }
    }

    #[test]
    fn small_channels_keep_mts_on_walls_longer() {
        let params = MotilityParams::default();
        let frac = |side: f64| {
            let shape = ChannelShape::rectangle(side, side).unwrap();
            let mut on = 0usize;
            let mut total = 0usize;
            for seed in 0..20 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let start = random_pose(&shape, &mut rng);
                let path = simulate_path(&shape, start, &params, 20_000, &mut rng);
                on += path.iter().filter(|p| p.on_wall()).count();
                total += path.len();
            }
            on as f64 / total as f64
        };
        let (small, large) = (frac(40.0), frac(400.0));
        assert!(small > large, "{small} vs {large}");
    }

    #[test]
    fn path_csv_has_header_and_rows() {
        let mut buf = Vec::new();
        let path = vec![MtPose::free(Point::ORIGIN, 0.0); 3];
        write_path_csv(&mut buf, &path, 0.1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,t_s,x_um,y_um,theta_rad,wall_mode");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",free"));
    }

    #[test]
    fn resolution_warning_triggers_for_tiny_shapes() {
        let p = MotilityParams::default();
        assert!(p.resolution_warning(&square40()).is_none());
        assert!(p.resolution_warning(&ChannelShape::rectangle(0.3, 5.0).unwrap()).is_some());
    }
}
