//! Experiment orchestration: configuration, seeded trial farming, figure
//! sweeps and the files the `kinesim` binary writes.
//!
//! Every channel use gets its own seed derived from `(master seed, x, trial)`,
//! and results are collected in job order, so output is identical for any
//! worker count.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelShape;
use crate::infotheory::{
    self, CapacityPoint, CapacityResult, ConditionalPmf, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE_BITS,
};
use crate::motility::MotilityParams;
use crate::optimizer::{self, OptimizerReport, PolygonSides, ShapeFamily, TripModelParams, DEFAULT_CIRCLE_SIDES};
use crate::transport::{self, TrialRecord, ZoneConfig, ZoneLayout, DEFAULT_MAX_LOAD};

/// Environment variable consulted when no worker count is given.
pub const WORKERS_ENV: &str = "KINESIM_WORKERS";

pub const DEFAULT_TRIALS_PER_X: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub shape: ChannelShape,
    pub motility: MotilityParams,
    pub zones: ZoneConfig,
    pub tpcu_s: f64,
    pub x_max: usize,
    pub trials_per_x: usize,
    /// Overrides the `⌊A·h·C⌋` rule when set.
    pub mt_count: Option<usize>,
    pub height_um: f64,
    pub concentration_per_fl: f64,
    pub max_load: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: ChannelShape::rectangle(40.0, 40.0).expect("valid default"),
            motility: MotilityParams::default(),
            zones: ZoneConfig::default(),
            tpcu_s: 320.0,
            x_max: 40,
            trials_per_x: DEFAULT_TRIALS_PER_X,
            mt_count: None,
            height_um: 10.0,
            concentration_per_fl: 0.001,
            max_load: DEFAULT_MAX_LOAD,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.motility.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.trials_per_x == 0 {
            return bad("trials_per_x must be at least 1".into());
        }
        if !(self.tpcu_s.is_finite() && self.tpcu_s > 0.0) {
            return bad(format!("tpcu_s = {}", self.tpcu_s));
        }
        if self.mt_count.is_none() && !(self.height_um > 0.0 && self.concentration_per_fl >= 0.0) {
            return bad(format!("need h > 0 and C >= 0, got h={}, C={}", self.height_um, self.concentration_per_fl));
        }
        if self.max_load == 0 {
            return bad("max_load must be at least 1".into());
        }
        Ok(())
    }

    pub fn mt_count(&self) -> usize {
        self.mt_count.unwrap_or_else(|| transport::mt_count_for(&self.shape, self.height_um, self.concentration_per_fl))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Zone layout, checked against `x_max`.
    pub fn layout(&self) -> Result<ZoneLayout> {
        let layout = transport::build_zones(&self.shape, self.zones)?;
        if self.x_max > layout.tx_capacity() {
            return Err(Error::ZoneCapacity { requested: self.x_max, capacity: layout.tx_capacity() });
        }
        Ok(layout)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at input `x` under `master`.
pub fn trial_seed(master: u64, x: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ x) ^ trial)
}

/// Worker count: explicit value, then [`WORKERS_ENV`], then all cores.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `jobs` on a pool of `workers` threads, preserving job order.
pub fn farm<J, T, F>(jobs: &[J], workers: usize, f: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}

/// `trials_per_x × (x_max + 1)` channel uses, ordered by `(x, trial)`.
pub fn simulate(config: &ExperimentConfig, workers: usize) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let layout = config.layout()?;
    let mt_count = config.mt_count();
    let jobs: Vec<(usize, usize)> =
        (0..=config.x_max).flat_map(|x| (0..config.trials_per_x).map(move |t| (x, t))).collect();
    farm(&jobs, workers, |&(x, t)| {
        let seed = trial_seed(config.seed, x as u64, t as u64);
        let r = transport::run_channel_use(
            &config.shape,
            &layout,
            x,
            config.tpcu_s,
            &config.motility,
            mt_count,
            config.max_load,
            seed,
        )?;
        Ok(TrialRecord::from_result(x, &r))
    })
}

pub fn write_records<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TrialRecord =
            serde_json::from_str(&line).map_err(|e| Error::DataIntegrity(format!("line {}: {e}", n + 1)))?;
        records.push(r);
    }
    Ok(records)
}

pub fn read_records_file(path: &Path) -> Result<Vec<TrialRecord>> {
    read_records(BufReader::new(File::open(path)?))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes `trials.jsonl` and `config.json` under `out_dir`; returns the records path.
pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<PathBuf> {
    let records = simulate(config, workers)?;
    write_records(create(out_dir, "trials.jsonl")?, &records)?;
    serde_json::to_writer_pretty(create(out_dir, "config.json")?, config)?;
    Ok(out_dir.join("trials.jsonl"))
}

/// Capacity curve from a trial log, written to `capacity.csv` under `out_dir`.
pub fn cmd_capacity(records_path: &Path, x_max_list: &[usize], out_dir: &Path) -> Result<Vec<CapacityPoint>> {
    let records = read_records_file(records_path)?;
    let pairs: Vec<(usize, usize)> = records.iter().map(|r| (r.x, r.y)).collect();
    let curve = infotheory::capacity_vs_xmax(&pairs, x_max_list, DEFAULT_TOLERANCE_BITS, DEFAULT_MAX_ITERS)?;
    let mut out = create(out_dir, "capacity.csv")?;
    infotheory::write_capacity_csv(&mut out, &curve)?;
    out.flush()?;
    Ok(curve)
}

/// Closed-form optimum for a family. `sides` only applies to polygons (`None` = circle limit).
pub fn cmd_optimize(
    family: ShapeFamily,
    tpcu_s: f64,
    v_avg_um_s: f64,
    sides: Option<usize>,
) -> Result<OptimizerReport> {
    let opt = match family {
        ShapeFamily::Rectangle => optimizer::optimize_rectangle(tpcu_s, v_avg_um_s)?,
        ShapeFamily::Polygon => {
            let s = sides.map_or(PolygonSides::Unbounded, PolygonSides::Finite);
            optimizer::optimize_polygon(tpcu_s, v_avg_um_s, s, DEFAULT_CIRCLE_SIDES)?
        }
        ShapeFamily::Ring => optimizer::optimize_ring(tpcu_s, v_avg_um_s, DEFAULT_CIRCLE_SIDES)?,
    };
    Ok(OptimizerReport::new(&opt, tpcu_s, v_avg_um_s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripRow {
    pub tpcu_s: f64,
    pub simulated_mean_trips: f64,
    pub model_trips: f64,
    pub relative_error: f64,
    pub trials: usize,
}

/// Single-MT trip counts against `v·T / P`, one row per TPCU.
pub fn trip_table(
    shape: &ChannelShape,
    tpcu_list: &[f64],
    trials: usize,
    seed: u64,
    motility: &MotilityParams,
    zones: ZoneConfig,
    workers: usize,
) -> Result<Vec<TripRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let layout = transport::build_zones(shape, zones)?;
    tpcu_list
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let jobs: Vec<usize> = (0..trials).collect();
            let trips = farm(&jobs, workers, |&i| {
                let r = transport::run_channel_use(
                    shape,
                    &layout,
                    0,
                    t,
                    motility,
                    1,
                    DEFAULT_MAX_LOAD,
                    trial_seed(seed, k as u64, i as u64),
                )?;
                Ok(r.per_mt_trips[0])
            })?;
            let simulated = trips.iter().map(|&n| f64::from(n)).sum::<f64>() / trials as f64;
            let model = optimizer::expected_single_mt_trips(shape, t, motility.v_avg_um_s);
            Ok(TripRow {
                tpcu_s: t,
                simulated_mean_trips: simulated,
                model_trips: model,
                relative_error: (simulated - model).abs() / model,
                trials,
            })
        })
        .collect()
}

pub fn write_trips_csv<W: Write>(mut out: W, label: Option<&str>, rows: &[TripRow], header: bool) -> io::Result<()> {
    if header {
        if label.is_some() {
            write!(out, "shape,")?;
        }
        writeln!(out, "tpcu_s,simulated_mean_trips,model_trips,relative_error")?;
    }
    for r in rows {
        if let Some(l) = label {
            write!(out, "{l},")?;
        }
        writeln!(out, "{},{},{},{}", r.tpcu_s, r.simulated_mean_trips, r.model_trips, r.relative_error)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripStatistics {
    pub mt_count: usize,
    pub mean_trips_per_mt: f64,
    pub mean_total_trips: f64,
    /// Continuous `T·v·C·h·A/P`.
    pub model_total_trips: f64,
    pub model_single_mt_trips: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub tx_cells: usize,
    pub zone_gap_um: f64,
    pub pmf: ConditionalPmf,
    pub capacity: CapacityResult,
    pub capacity_curve: Vec<CapacityPoint>,
    pub trips: TripStatistics,
    pub trials: usize,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    /// Everything except wall-clock time, for reproducibility checks.
    pub fn same_results(&self, other: &ExperimentReport) -> bool {
        ExperimentReport { wall_clock_s: 0.0, ..self.clone() }
            == ExperimentReport { wall_clock_s: 0.0, ..other.clone() }
    }
}

/// Simulates and analyses one configuration end to end.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentReport> {
    let started = Instant::now();
    let layout = config.layout()?;
    let records = simulate(config, workers)?;
    let pairs: Vec<(usize, usize)> = records.iter().map(|r| (r.x, r.y)).collect();
    let pmf = infotheory::estimate_pmf(pairs.iter().copied(), config.x_max)?;
    let capacity = infotheory::blahut_arimoto(&pmf, DEFAULT_TOLERANCE_BITS, DEFAULT_MAX_ITERS)?;
    let xs: Vec<usize> = (1..=config.x_max).collect();
    let capacity_curve = infotheory::capacity_vs_xmax(&pairs, &xs, DEFAULT_TOLERANCE_BITS, DEFAULT_MAX_ITERS)?;

    let mt_count = config.mt_count();
    let total: f64 = records.iter().map(|r| r.trips.iter().map(|&t| f64::from(t)).sum::<f64>()).sum();
    let n = records.len() as f64;
    let trips = TripStatistics {
        mt_count,
        mean_trips_per_mt: if mt_count > 0 { total / (n * mt_count as f64) } else { 0.0 },
        mean_total_trips: total / n,
        model_total_trips: optimizer::expected_total_trips(
            &config.shape,
            &TripModelParams {
                tpcu_s: config.tpcu_s,
                v_avg_um_s: config.motility.v_avg_um_s,
                concentration_per_fl: config.concentration_per_fl,
                height_um: config.height_um,
            },
        ),
        model_single_mt_trips: optimizer::expected_single_mt_trips(
            &config.shape,
            config.tpcu_s,
            config.motility.v_avg_um_s,
        ),
    };
    Ok(ExperimentReport {
        config: config.clone(),
        tx_cells: layout.tx_capacity(),
        zone_gap_um: layout.zone_gap_um(),
        pmf,
        capacity,
        capacity_curve,
        trips,
        trials: records.len(),
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig4,
    Fig5a,
    Fig5b,
    Fig6,
    Fig7,
    Fig8,
}

impl Figure {
    pub const ALL: [Figure; 6] = [Figure::Fig4, Figure::Fig5a, Figure::Fig5b, Figure::Fig6, Figure::Fig7, Figure::Fig8];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5a => "fig5a",
            Figure::Fig5b => "fig5b",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
        }
    }

    /// TPCU values swept by the figure.
    pub fn tpcu_values(self) -> &'static [f64] {
        match self {
            Figure::Fig4 => &[160.0, 320.0, 640.0],
            Figure::Fig5a => &[160.0],
            Figure::Fig5b => &[240.0],
            Figure::Fig6 | Figure::Fig8 => &[320.0],
            Figure::Fig7 => &[250.0],
        }
    }

    /// Labelled shapes of the sweep. `Fig4` uses one hand-picked representative per family.
    pub fn shapes(self) -> Vec<(String, ChannelShape)> {
        let poly = |n, r| ChannelShape::polygon(n, r).expect("valid figure shape");
        let ring = |n, ri, ro| ChannelShape::ring(n, ri, ro).expect("valid figure shape");
        let rect = |w, l| ChannelShape::rectangle(w, l).expect("valid figure shape");
        let labelled = |v: Vec<ChannelShape>| v.into_iter().map(|s| (s.to_string(), s)).collect();
        match self {
            Figure::Fig4 => labelled(vec![rect(40.0, 40.0), poly(20, 25.57), ring(8, 20.0, 25.0)]),
            Figure::Fig5a | Figure::Fig5b => {
                let sides: Vec<f64> = (0..7).map(|k| 20.0 + 5.0 * k as f64).collect();
                labelled(sides.iter().flat_map(|&w| sides.iter().map(move |&l| rect(w, l))).collect())
            }
            Figure::Fig6 => {
                labelled(vec![rect(40.0, 40.0), poly(8, 26.13), poly(12, 25.76), poly(16, 25.63), poly(20, 25.57)])
            }
            Figure::Fig7 => labelled([17.0, 20.0, 22.75, 25.57].iter().map(|&r| poly(20, r)).collect()),
            Figure::Fig8 => labelled([0.0, 10.0, 15.0, 20.0].iter().map(|&ri| ring(20, ri, 25.57)).collect()),
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Parameters shared by every shape in a figure sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub trials: usize,
    pub seed: u64,
    pub x_max: usize,
    pub motility: MotilityParams,
    pub zones: ZoneConfig,
    pub height_um: f64,
    pub concentration_per_fl: f64,
    pub max_load: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let c = ExperimentConfig::default();
        SweepSettings {
            trials: DEFAULT_TRIALS_PER_X,
            seed: c.seed,
            x_max: c.x_max,
            motility: c.motility,
            zones: c.zones,
            height_um: c.height_um,
            concentration_per_fl: c.concentration_per_fl,
            max_load: c.max_load,
        }
    }
}

impl SweepSettings {
    pub fn config_for(&self, shape: &ChannelShape, tpcu_s: f64) -> ExperimentConfig {
        ExperimentConfig {
            shape: shape.clone(),
            motility: self.motility,
            zones: self.zones,
            tpcu_s,
            x_max: self.x_max,
            trials_per_x: self.trials,
            mt_count: None,
            height_um: self.height_um,
            concentration_per_fl: self.concentration_per_fl,
            max_load: self.max_load,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub label: String,
    pub tpcu_s: f64,
    pub report: ExperimentReport,
}

impl ShapeCurve {
    pub fn capacity_at(&self, x_max: usize) -> Option<f64> {
        self.report.capacity_curve.iter().find(|c| c.x_max == x_max).map(|c| c.capacity_bits)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureReport {
    pub figure: Figure,
    pub settings: SweepSettings,
    pub curves: Vec<ShapeCurve>,
    pub trips: Vec<(String, Vec<TripRow>)>,
}

impl FigureReport {
    /// Label of the shape with the highest capacity at the sweep's `x_max`.
    pub fn argmax_label(&self) -> Option<&str> {
        let x = self.settings.x_max;
        self.curves
            .iter()
            .filter_map(|c| c.capacity_at(x).map(|v| (c, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c.label.as_str())
    }
}

/// Runs a figure sweep. `Fig4` yields trip tables; the others yield capacity curves.
pub fn reproduce(figure: Figure, settings: &SweepSettings, workers: usize) -> Result<FigureReport> {
    let mut curves = Vec::new();
    let mut trips = Vec::new();
    for (label, shape) in figure.shapes() {
        if figure == Figure::Fig4 {
            let rows = trip_table(
                &shape,
                figure.tpcu_values(),
                settings.trials,
                settings.seed,
                &settings.motility,
                settings.zones,
                workers,
            )?;
            trips.push((label, rows));
            continue;
        }
        for &t in figure.tpcu_values() {
            let report = run_experiment(&settings.config_for(&shape, t), workers)?;
            curves.push(ShapeCurve { label: label.clone(), tpcu_s: t, report });
        }
    }
    Ok(FigureReport { figure, settings: settings.clone(), curves, trips })
}

/// Writes `<fig>_report.json` plus plot-ready CSVs; returns the files written.
pub fn write_figure(report: &FigureReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let id = report.figure.id();
    let mut written = Vec::new();
    if report.figure == Figure::Fig4 {
        let name = format!("{id}_trips.csv");
        let mut out = create(out_dir, &name)?;
        for (k, (label, rows)) in report.trips.iter().enumerate() {
            write_trips_csv(&mut out, Some(label), rows, k == 0)?;
        }
        out.flush()?;
        written.push(out_dir.join(name));
    } else {
        let name = format!("{id}_capacity.csv");
        let mut out = create(out_dir, &name)?;
        writeln!(out, "shape,tpcu_s,x_max,capacity_bits,iters,gap_bits")?;
        for c in &report.curves {
            for p in &c.report.capacity_curve {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.label, c.tpcu_s, p.x_max, p.capacity_bits, p.iterations, p.gap_bits
                )?;
            }
        }
        out.flush()?;
        written.push(out_dir.join(name));

        let name = format!("{id}_summary.csv");
        let mut out = create(out_dir, &name)?;
        writeln!(
            out,
            "shape,tpcu_s,mt_count,area_um2,perimeter_um,objective_um,mean_total_trips,model_total_trips,capacity_bits"
        )?;
        for c in &report.curves {
            let s = &c.report.config.shape;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.label,
                c.tpcu_s,
                c.report.trips.mt_count,
                s.area(),
                s.perimeter(),
                optimizer::objective(s),
                c.report.trips.mean_total_trips,
                c.report.trips.model_total_trips,
                c.report.capacity.capacity_bits
            )?;
        }
        out.flush()?;
        written.push(out_dir.join(name));
    }
    let name = format!("{id}_report.json");
    serde_json::to_writer_pretty(create(out_dir, &name)?, report)?;
    written.push(out_dir.join(name));
    Ok(written)
}
