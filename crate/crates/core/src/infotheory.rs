//! Empirical channel matrices, mutual information and Blahut–Arimoto capacity.
//!
//! Everything is computed in nats and converted to bits on the way out.

use std::f64::consts::LN_2;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE_BITS: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic matrix `f(y | x)`. Row `x` is the output distribution for input `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfFile", into = "PmfFile")]
pub struct ConditionalPmf {
    rows: Vec<Vec<f64>>,
    trials_per_row: Vec<u64>,
}

/// On-disk layout `{"x_max":…, "rows":[[…]], "trials_per_row":[…]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PmfFile {
    pub x_max: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub trials_per_row: Vec<u64>,
}

impl TryFrom<PmfFile> for ConditionalPmf {
    type Error = Error;
    fn try_from(f: PmfFile) -> Result<Self> {
        if f.rows.len() != f.x_max + 1 {
            return Err(Error::DataIntegrity(format!("x_max = {} but {} rows", f.x_max, f.rows.len())));
        }
        ConditionalPmf::from_rows(f.rows, f.trials_per_row)
    }
}

impl From<ConditionalPmf> for PmfFile {
    fn from(p: ConditionalPmf) -> PmfFile {
        PmfFile { x_max: p.x_max(), rows: p.rows, trials_per_row: p.trials_per_row }
    }
}

impl ConditionalPmf {
    /// Validates shape, non-negativity and row sums. `trials_per_row` may be empty.
    pub fn from_rows(rows: Vec<Vec<f64>>, trials_per_row: Vec<u64>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(Error::DataIntegrity("empty channel matrix".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DataIntegrity(format!("row {x} has {} entries, expected {width}", row.len())));
            }
            if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return Err(Error::DataIntegrity(format!("row {x} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::DataIntegrity(format!("row {x} sums to {s}")));
            }
        }
        if !trials_per_row.is_empty() && trials_per_row.len() != rows.len() {
            return Err(Error::DataIntegrity("trials_per_row length does not match rows".into()));
        }
        Ok(ConditionalPmf { rows, trials_per_row })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect()).collect();
        ConditionalPmf { rows, trials_per_row: Vec::new() }
    }

    pub fn x_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn trials_per_row(&self) -> &[u64] {
        &self.trials_per_row
    }

    /// Same channel with output labels permuted: new column `k` is old column `perm[k]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_outputs()];
        if perm.len() != self.n_outputs()
            || perm.iter().any(|&k| k >= seen.len() || std::mem::replace(&mut seen[k], true))
        {
            return Err(Error::InvalidParameter("not a permutation of the outputs".into()));
        }
        let rows = self.rows.iter().map(|r| perm.iter().map(|&k| r[k]).collect()).collect();
        Ok(ConditionalPmf { rows, trials_per_row: self.trials_per_row.clone() })
    }
}

/// Empirical `f(y | x)` over `x, y ∈ {0..x_max}` from `(x, y)` pairs.
/// Pairs with `x > x_max` are ignored.
pub fn estimate_pmf<I>(pairs: I, x_max: usize) -> Result<ConditionalPmf>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let n = x_max + 1;
    let mut counts = vec![vec![0u64; n]; n];
    for (x, y) in pairs {
        if x > x_max {
            continue;
        }
        if y > x {
            return Err(Error::DataIntegrity(format!("record delivers y = {y} > x = {x}")));
        }
        counts[x][y] += 1;
    }
    let trials: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let missing: Vec<usize> = (0..n).filter(|&x| trials[x] == 0).collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteData { missing });
    }
    let rows = counts.iter().zip(&trials).map(|(r, &t)| r.iter().map(|&c| c as f64 / t as f64).collect()).collect();
    Ok(ConditionalPmf { rows, trials_per_row: trials })
}

fn output_marginal(pmf: &ConditionalPmf, input: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; pmf.n_outputs()];
    for (row, &px) in pmf.rows.iter().zip(input) {
        for (qy, &w) in q.iter_mut().zip(row) {
            *qy += px * w;
        }
    }
    q
}

/// KL divergence of each row from the output marginal, in nats.
fn row_divergences(pmf: &ConditionalPmf, q: &[f64]) -> Vec<f64> {
    pmf.rows
        .iter()
        .map(|row| row.iter().zip(q).filter(|(&w, _)| w > 0.0).map(|(&w, &qy)| w * (w / qy).ln()).sum())
        .collect()
}

fn check_input(pmf: &ConditionalPmf, input: &[f64]) -> Result<()> {
    if input.len() != pmf.n_inputs() {
        return Err(Error::InvalidParameter(format!(
            "input has {} entries, channel has {} inputs",
            input.len(),
            pmf.n_inputs()
        )));
    }
    let s: f64 = input.iter().sum();
    if input.iter().any(|&p| p.is_nan() || p < 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("input distribution sums to {s}")));
    }
    Ok(())
}

/// `I(X; Y)` in bits for input distribution `input`.
pub fn mutual_information(pmf: &ConditionalPmf, input: &[f64]) -> Result<f64> {
    check_input(pmf, input)?;
    let q = output_marginal(pmf, input);
    let d = row_divergences(pmf, &q);
    let nats: f64 = input.iter().zip(&d).map(|(p, d)| p * d).sum();
    Ok(nats.max(0.0) / LN_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity_bits: f64,
    pub input_pmf: Vec<f64>,
    pub iterations: usize,
    pub lower_bound_bits: f64,
    pub upper_bound_bits: f64,
    pub converged: bool,
}

impl CapacityResult {
    pub fn gap_bits(&self) -> f64 {
        self.upper_bound_bits - self.lower_bound_bits
    }
}

pub fn blahut_arimoto(pmf: &ConditionalPmf, tolerance_bits: f64, max_iters: usize) -> Result<CapacityResult> {
    blahut_arimoto_observed(pmf, tolerance_bits, max_iters, |_, _, _| {})
}

/// Blahut–Arimoto with a callback receiving `(iteration, lower_bits, upper_bits)`
/// for every bracket evaluated.
///
/// The lower bound is `I(p)` of the current iterate and the upper bound is
/// `max_x D(f(·|x) ‖ q)`; both bracket the capacity at every iteration.
pub fn blahut_arimoto_observed<F>(
    pmf: &ConditionalPmf,
    tolerance_bits: f64,
    max_iters: usize,
    mut observe: F,
) -> Result<CapacityResult>
where
    F: FnMut(usize, f64, f64),
{
    if !(tolerance_bits.is_finite() && tolerance_bits > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance_bits = {tolerance_bits}")));
    }
    // never-observed outputs carry no information
    let keep: Vec<usize> = (0..pmf.n_outputs()).filter(|&y| pmf.rows.iter().any(|r| r[y] > 0.0)).collect();
    let reduced = ConditionalPmf {
        rows: pmf.rows.iter().map(|r| keep.iter().map(|&y| r[y]).collect()).collect(),
        trials_per_row: Vec::new(),
    };

    let n = reduced.n_inputs();
    let mut p = vec![1.0 / n as f64; n];
    let tol = tolerance_bits * LN_2;
    let mut iter = 0;
    loop {
        let q = output_marginal(&reduced, &p);
        let d = row_divergences(&reduced, &q);
        let lower = p.iter().zip(&d).map(|(p, d)| p * d).sum::<f64>().max(0.0);
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(lower);
        observe(iter, lower / LN_2, upper / LN_2);
        let converged = upper - lower <= tol;
        if converged || iter >= max_iters {
            return Ok(CapacityResult {
                capacity_bits: lower / LN_2,
                input_pmf: p,
                iterations: iter,
                lower_bound_bits: lower / LN_2,
                upper_bound_bits: upper / LN_2,
                converged,
            });
        }
        let mut total = 0.0;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= (dx - upper).exp();
            total += *px;
        }
        for px in &mut p {
            *px /= total;
        }
        iter += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub x_max: usize,
    pub capacity_bits: f64,
    pub iterations: usize,
    pub gap_bits: f64,
    pub converged: bool,
}

/// Capacity of the channel restricted to inputs `{0..x_max}` for each requested `x_max`.
pub fn capacity_vs_xmax(
    pairs: &[(usize, usize)],
    x_max_list: &[usize],
    tolerance_bits: f64,
    max_iters: usize,
) -> Result<Vec<CapacityPoint>> {
    x_max_list
        .iter()
        .map(|&x_max| {
            let pmf = estimate_pmf(pairs.iter().copied(), x_max)?;
            let r = blahut_arimoto(&pmf, tolerance_bits, max_iters)?;
            Ok(CapacityPoint {
                x_max,
                capacity_bits: r.capacity_bits,
                iterations: r.iterations,
                gap_bits: r.gap_bits(),
                converged: r.converged,
            })
        })
        .collect()
}

/// CSV `x_max,capacity_bits,iters,gap_bits`.
pub fn write_capacity_csv<W: Write>(mut out: W, curve: &[CapacityPoint]) -> io::Result<()> {
    writeln!(out, "x_max,capacity_bits,iters,gap_bits")?;
    for c in curve {
        writeln!(out, "{},{},{},{}", c.x_max, c.capacity_bits, c.iterations, c.gap_bits)?;
    }
    Ok(())
}
