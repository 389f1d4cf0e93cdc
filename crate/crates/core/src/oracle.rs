//! Brute-force reference computations.
//!
//! These deliberately avoid the machinery they are used to check: the grid
//! search only evaluates `E0`, never its derivative; the allocation search
//! enumerates every composition of `Q`; the ensemble check draws random
//! codebooks and decodes them exactly.

use rand::Rng;
use serde::Serialize;

use crate::arq::trial_rng;
use crate::channel::HopChannel;
use crate::error::{Error, Result};
use crate::system::log_sum_exp;

pub const MAX_EXHAUSTIVE_Q: u64 = 60;
pub const MAX_EXHAUSTIVE_HOPS: usize = 3;
pub const MAX_ENSEMBLE_BLOCKLENGTH: usize = 10;
pub const MAX_ENSEMBLE_CODEWORDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub rho_min: f64,
    pub rho_max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(rho_min: f64, rho_max: f64, step: f64) -> Result<Self> {
        if !(rho_min >= 0.0 && rho_min < rho_max && step > 0.0 && rho_max.is_finite()) {
            return Err(Error::domain(format!(
                "invalid grid [{rho_min}, {rho_max}] step {step}"
            )));
        }
        Ok(GridSpec {
            rho_min,
            rho_max,
            step,
        })
    }

    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let count = ((self.rho_max - self.rho_min) / self.step).floor() as u64;
        (0..=count)
            .map(move |k| self.rho_min + k as f64 * self.step)
            .chain(std::iter::once(self.rho_max))
    }
}

/// Maximizes `E0(rho) - rho * rate` over the grid. Returns `(value, rho)`.
pub fn grid_max_exponent(rate: f64, ch: &HopChannel, grid: &GridSpec) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, grid.rho_min);
    for rho in grid.points() {
        let v = ch.e0(rho)? - rho * rate;
        if v > best.0 {
            best = (v, rho);
        }
    }
    Ok(best)
}

/// Grid maximization refined by repeatedly re-gridding a window of two steps
/// around the incumbent with a step 100 times finer, until the step drops to
/// `final_step`. The objective is concave in `rho`, so the maximizer always
/// lies within one step of the best grid point.
pub fn refined_grid_max_exponent(
    rate: f64,
    ch: &HopChannel,
    grid: &GridSpec,
    final_step: f64,
) -> Result<(f64, f64)> {
    let mut spec = *grid;
    let mut best = grid_max_exponent(rate, ch, &spec)?;
    while spec.step > final_step {
        let lo = (best.1 - spec.step).max(grid.rho_min);
        let hi = (best.1 + spec.step).min(grid.rho_max);
        let step = (spec.step / 100.0).max(final_step);
        spec = GridSpec::new(lo, hi, step)?;
        let cand = grid_max_exponent(rate, ch, &spec)?;
        if cand.0 >= best.0 {
            best = cand;
        }
    }
    Ok(best)
}

/// Enumerates all compositions of `total` into `exponents.len()` positive
/// parts and returns the one minimizing `sum exp(-Q_n E_n)` (first in
/// lexicographic order on ties) together with `ln` of the objective.
pub fn exhaustive_allocation(exponents: &[f64], total: u64) -> Result<(Vec<u64>, f64)> {
    let n = exponents.len();
    if n == 0 || n > MAX_EXHAUSTIVE_HOPS || total > MAX_EXHAUSTIVE_Q {
        return Err(Error::InstanceTooLarge(format!(
            "exhaustive search supports Q <= {MAX_EXHAUSTIVE_Q}, 1 <= N <= {MAX_EXHAUSTIVE_HOPS}; got Q = {total}, N = {n}"
        )));
    }
    if total < n as u64 {
        return Err(Error::infeasible(None, "fewer channel uses than hops"));
    }
    let mut best: Option<(Vec<u64>, f64)> = None;
    let mut current = vec![0u64; n];
    enumerate(exponents, total, 0, &mut current, &mut best);
    Ok(best.expect("at least one composition exists"))
}

fn enumerate(
    exponents: &[f64],
    remaining: u64,
    hop: usize,
    current: &mut Vec<u64>,
    best: &mut Option<(Vec<u64>, f64)>,
) {
    let n = exponents.len();
    if hop == n - 1 {
        current[hop] = remaining;
        let args: Vec<f64> = current
            .iter()
            .zip(exponents)
            .map(|(&q, &e)| -(q as f64) * e)
            .collect();
        let obj = log_sum_exp(&args);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            *best = Some((current.clone(), obj));
        }
        return;
    }
    let hops_after = (n - hop - 1) as u64;
    for q in 1..=(remaining - hops_after) {
        current[hop] = q;
        enumerate(exponents, remaining - q, hop + 1, current, best);
    }
}

/// Exact ML block error probability of one binary codebook on a BSC,
/// averaged over equiprobable messages. Every output is enumerated; a tie in
/// likelihood with a competing codeword counts as an error.
pub fn ml_error_probability(codebook: &[u16], blocklength: usize, crossover: f64) -> f64 {
    let q = 1.0 - crossover;
    // likelihood of an output at Hamming distance d
    let lik: Vec<f64> = (0..=blocklength)
        .map(|d| crossover.powi(d as i32) * q.powi((blocklength - d) as i32))
        .collect();
    let mut err = 0.0;
    for (m, &cw) in codebook.iter().enumerate() {
        for y in 0u32..(1u32 << blocklength) {
            let d = (cw as u32 ^ y).count_ones() as usize;
            let own = lik[d];
            if own == 0.0 {
                continue;
            }
            let lost = codebook.iter().enumerate().any(|(k, &other)| {
                k != m && lik[(other as u32 ^ y).count_ones() as usize] >= own
            });
            if lost {
                err += own;
            }
        }
    }
    err / codebook.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub codebooks: u64,
    pub seed: u64,
}

/// Average exact-ML error of random binary codebooks with i.i.d. uniform
/// symbols. Codebook `k` is drawn from the stream `(seed, k)`.
pub fn bsc_ensemble_error(
    blocklength: usize,
    num_codewords: usize,
    crossover: f64,
    codebooks: u64,
    seed: u64,
) -> Result<EnsembleEstimate> {
    if blocklength == 0
        || blocklength > MAX_ENSEMBLE_BLOCKLENGTH
        || !(2..=MAX_ENSEMBLE_CODEWORDS).contains(&num_codewords)
    {
        return Err(Error::InstanceTooLarge(format!(
            "ensemble check supports blocklength 1..={MAX_ENSEMBLE_BLOCKLENGTH} and 2..={MAX_ENSEMBLE_CODEWORDS} codewords; got {blocklength}, {num_codewords}"
        )));
    }
    if !(0.0..=1.0).contains(&crossover) {
        return Err(Error::domain(format!("crossover {crossover} outside [0, 1]")));
    }
    if codebooks == 0 {
        return Err(Error::domain("at least one codebook is required"));
    }
    let mask = (1u32 << blocklength) - 1;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut book = vec![0u16; num_codewords];
    for k in 0..codebooks {
        let mut rng = trial_rng(seed, k);
        for cw in book.iter_mut() {
            *cw = (rng.random::<u32>() & mask) as u16;
        }
        let pe = ml_error_probability(&book, blocklength, crossover);
        sum += pe;
        sum_sq += pe * pe;
    }
    let n = codebooks as f64;
    let mean = sum / n;
    let var = if codebooks > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EnsembleEstimate {
        mean,
        stderr: (var / n).sqrt(),
        codebooks,
        seed,
    })
}
