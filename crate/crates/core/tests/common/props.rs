//! Invariant checks shared by the property-test suite and the acceptance run.

use kinesim::infotheory::{self, ConditionalPmf};
use kinesim::motility::{self, MtPose, Step};
use kinesim::transport::{self, ChannelUse, ZoneConfig};
use kinesim::{ChannelShape, MotilityParams};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CASES: u32 = 10_000;

pub fn any_shape() -> impl Strategy<Value = ChannelShape> {
    prop_oneof![
        (2.0..80.0f64, 2.0..80.0f64).prop_map(|(w, l)| ChannelShape::rectangle(w, l).unwrap()),
        (3usize..32, 2.0..40.0f64).prop_map(|(n, r)| ChannelShape::polygon(n, r).unwrap()),
        (3usize..32, 3.0..40.0f64, 0.0..0.85f64).prop_map(|(n, ro, f)| ChannelShape::ring(n, f * ro, ro).unwrap()),
    ]
}

/// Shapes large enough to hold the default zones.
pub fn zoned_shape() -> impl Strategy<Value = ChannelShape> {
    prop_oneof![
        (20.0..50.0f64, 20.0..50.0f64).prop_map(|(w, l)| ChannelShape::rectangle(w, l).unwrap()),
        (6usize..24, 15.0..30.0f64).prop_map(|(n, r)| ChannelShape::polygon(n, r).unwrap()),
        (8usize..24, 18.0..30.0f64, 0.0..0.6f64).prop_map(|(n, ro, f)| ChannelShape::ring(n, f * ro, ro).unwrap()),
    ]
}

pub fn any_params() -> impl Strategy<Value = MotilityParams> {
    (0.01..0.5f64, 0.05..8.0f64, 0.0..0.5f64, 1.0..500.0f64).prop_map(|(dt, v, d, lp)| MotilityParams {
        dt_s: dt,
        v_avg_um_s: v,
        diffusion_um2_s: d,
        persistence_um: lp,
    })
}

pub fn pmf_from_counts(counts: &[Vec<u32>]) -> ConditionalPmf {
    let rows = counts
        .iter()
        .map(|r| {
            let s: u32 = r.iter().sum();
            r.iter().map(|&c| f64::from(c) / f64::from(s)).collect()
        })
        .collect();
    ConditionalPmf::from_rows(rows, Vec::new()).unwrap()
}

pub fn any_counts() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (1usize..7, 1usize..7).prop_flat_map(|(n, m)| {
        prop::collection::vec(
            prop::collection::vec(0u32..20, m).prop_filter("nonzero row", |r| r.iter().any(|&c| c > 0)),
            n,
        )
    })
}

pub fn mt_stays_inside_every_step_input() -> impl Strategy<Value = (ChannelShape, MotilityParams, u64)> {
    (any_shape(), any_params(), any::<u64>())
}

pub fn mt_stays_inside_every_step(
    (shape, params, seed): (ChannelShape, MotilityParams, u64),
) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = motility::random_pose(&shape, &mut rng);
    let path = motility::simulate_path(&shape, start, &params, 60, &mut rng);
    prop_assert_eq!(path.len(), 61);
    for (k, p) in path.iter().enumerate() {
        prop_assert!(shape.contains(p.position), "step {} at {:?} in {}", k, p.position, shape);
        prop_assert!(p.heading_rad > -std::f64::consts::PI - 1e-12 && p.heading_rad <= std::f64::consts::PI + 1e-12);
    }
    Ok(())
}

pub fn step_covers_exactly_the_sampled_length_input() -> impl Strategy<Value = (ChannelShape, u64, f64, f64, usize)> {
    (any_shape(), any::<u64>(), -1.0..60.0f64, -3.0..3.0f64, 0usize..30)
}

pub fn step_covers_exactly_the_sampled_length(
    (shape, seed, dr, dtheta, warmup): (ChannelShape, u64, f64, f64, usize),
) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = MotilityParams { v_avg_um_s: 4.0, ..MotilityParams::default() };
    let start = motility::random_pose(&shape, &mut rng);
    let pose: MtPose = *motility::simulate_path(&shape, start, &params, warmup, &mut rng).last().unwrap();
    let (next, travelled) = motility::apply_step(&shape, &pose, Step { dr, dtheta });
    prop_assert!((travelled - dr.max(0.0)).abs() <= 1e-9 * (1.0 + dr.abs()), "travelled {} for dr {}", travelled, dr);
    // the straight-line displacement can never exceed the path length
    prop_assert!(pose.position.distance(next.position) <= travelled + 1e-9);
    prop_assert!(shape.contains(next.position));
    Ok(())
}

pub fn transport_bookkeeping_holds_every_step_input(
) -> impl Strategy<Value = (ChannelShape, u64, usize, usize, f64, usize)> {
    (zoned_shape(), any::<u64>(), 0usize..6, 1usize..6, 0.0..1.0f64, 1usize..250)
}

pub fn transport_bookkeeping_holds_every_step(
    (shape, seed, mts, max_load, x_frac, steps): (ChannelShape, u64, usize, usize, f64, usize),
) -> Result<(), TestCaseError> {
    let layout = transport::build_zones(&shape, ZoneConfig::default()).unwrap();
    let x = ((layout.tx_capacity().min(30) as f64) * x_frac) as usize;
    let params = MotilityParams { v_avg_um_s: 2.0, ..MotilityParams::default() };
    let mut cu = ChannelUse::new(&shape, &layout, x, params, mts, max_load, seed).unwrap();
    let mut delivered = 0;
    for _ in 0..steps {
        cu.step();
        prop_assert!(cu.delivered() >= delivered);
        delivered = cu.delivered();
        prop_assert_eq!(cu.delivered() + cu.in_transit() + cu.remaining(), x);
        let mut ids = Vec::new();
        for c in cu.carriers() {
            prop_assert!(c.cargo.loaded.len() <= max_load);
            prop_assert!(shape.contains(c.pose.position));
            ids.extend_from_slice(&c.cargo.loaded);
        }
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        prop_assert_eq!(before, ids.len(), "a particle rides two carriers");
    }
    let r = cu.finish();
    prop_assert_eq!(r.delivered + r.particles_in_transit + r.particles_remaining, x);
    Ok(())
}

pub fn channel_use_is_reproducible_input() -> impl Strategy<Value = (ChannelShape, u64, usize, usize)> {
    (zoned_shape(), any::<u64>(), 0usize..15, 0usize..4)
}

pub fn channel_use_is_reproducible(
    (shape, seed, x, mts): (ChannelShape, u64, usize, usize),
) -> Result<(), TestCaseError> {
    let layout = transport::build_zones(&shape, ZoneConfig::default()).unwrap();
    let params = MotilityParams::default();
    let a = transport::run_channel_use(&shape, &layout, x, 15.0, &params, mts, 5, seed).unwrap();
    let b = transport::run_channel_use(&shape, &layout, x, 15.0, &params, mts, 5, seed).unwrap();
    prop_assert_eq!(a, b);
    let mut r1 = ChaCha8Rng::seed_from_u64(seed);
    let mut r2 = ChaCha8Rng::seed_from_u64(seed);
    let s1 = motility::random_pose(&shape, &mut r1);
    let p1 = motility::simulate_path(&shape, s1, &params, 40, &mut r1);
    let s2 = motility::random_pose(&shape, &mut r2);
    let p2 = motility::simulate_path(&shape, s2, &params, 40, &mut r2);
    for (a, b) in p1.iter().zip(&p2) {
        prop_assert_eq!(a.position.x.to_bits(), b.position.x.to_bits());
        prop_assert_eq!(a.position.y.to_bits(), b.position.y.to_bits());
        prop_assert_eq!(a.heading_rad.to_bits(), b.heading_rad.to_bits());
        prop_assert_eq!(a.wall_mode, b.wall_mode);
    }
    Ok(())
}

pub fn estimated_pmfs_are_row_stochastic_input() -> impl Strategy<Value = (Vec<(usize, u16)>, usize)> {
    (prop::collection::vec((0usize..8, any::<u16>()), 1..300), 0usize..8)
}

pub fn estimated_pmfs_are_row_stochastic((pairs, x_max): (Vec<(usize, u16)>, usize)) -> Result<(), TestCaseError> {
    let mut pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(x, y)| (x, usize::from(y) % (x + 1))).collect();
    pairs.extend((0..=x_max).map(|x| (x, 0)));
    let pmf = infotheory::estimate_pmf(pairs.iter().copied(), x_max).unwrap();
    prop_assert_eq!(pmf.n_inputs(), x_max + 1);
    for (x, row) in pmf.rows().iter().enumerate() {
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.iter().all(|&p| p >= 0.0));
        prop_assert!(row.iter().skip(x + 1).all(|&p| p == 0.0));
    }
    Ok(())
}

pub fn blahut_arimoto_brackets_capacity_input() -> impl Strategy<Value = (Vec<Vec<u32>>,)> {
    (any_counts(),)
}

pub fn blahut_arimoto_brackets_capacity((counts,): (Vec<Vec<u32>>,)) -> Result<(), TestCaseError> {
    let pmf = pmf_from_counts(&counts);
    let mut last_lower = f64::NEG_INFINITY;
    let mut ok = true;
    let c = infotheory::blahut_arimoto_observed(&pmf, 1e-9, 100_000, |_, lo, up| {
        ok &= lo <= up + 1e-12 && lo >= last_lower - 1e-12;
        last_lower = lo;
    })
    .unwrap();
    prop_assert!(ok, "bracket order or monotone lower bound violated");
    // nearly useless channels converge slowly; the flag must then be honest
    prop_assert_eq!(c.converged, c.gap_bits() <= 1e-9);
    prop_assert!(c.lower_bound_bits <= c.capacity_bits + 1e-12 && c.capacity_bits <= c.upper_bound_bits + 1e-12);
    let cap_limit = (pmf.n_inputs().min(pmf.n_outputs()) as f64).log2();
    prop_assert!(c.capacity_bits <= cap_limit + 1e-9);
    let mi = infotheory::mutual_information(&pmf, &c.input_pmf).unwrap();
    prop_assert!((mi - c.capacity_bits).abs() < 1e-9);
    let uniform = vec![1.0 / pmf.n_inputs() as f64; pmf.n_inputs()];
    prop_assert!(infotheory::mutual_information(&pmf, &uniform).unwrap() <= c.upper_bound_bits + 1e-12);
    Ok(())
}

pub fn relabelling_outputs_keeps_capacity_input() -> impl Strategy<Value = (Vec<Vec<u32>>, u64)> {
    (any_counts(), any::<u64>())
}

pub fn relabelling_outputs_keeps_capacity((counts, key): (Vec<Vec<u32>>, u64)) -> Result<(), TestCaseError> {
    let pmf = pmf_from_counts(&counts);
    let m = pmf.n_outputs();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
    let a = infotheory::blahut_arimoto(&pmf, 1e-12, 100_000).unwrap();
    let b = infotheory::blahut_arimoto(&pmf.permute_outputs(&perm).unwrap(), 1e-12, 100_000).unwrap();
    prop_assert!((a.capacity_bits - b.capacity_bits).abs() < 1e-12, "{} vs {}", a.capacity_bits, b.capacity_bits);
    Ok(())
}

/// Runs one check over `cases` random inputs; the error names the minimal failing case.
pub fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}
