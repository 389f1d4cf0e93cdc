//! Self-checks exposed by `hopbound verify`: each suite pits a solver against
//! a brute-force oracle on seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::{
    information_continuous_blocks, optimal_time_share, reliability_optimal_blocks,
    stationarity_residual,
};
use crate::channel::HopChannel;
use crate::error::Result;
use crate::exponents::{random_coding_exponent, sphere_packing_exponent};
use crate::oracle::{
    bsc_ensemble_error, exhaustive_allocation, refined_grid_max_exponent, GridSpec,
};
use crate::system::log_sum_exp;

pub const GRID_INSTANCES: usize = 50;
pub const GRID_TOLERANCE: f64 = 1e-8;
pub const SP_GRID_RHO_MAX: f64 = 1000.0;
pub const ALLOC_INSTANCES: usize = 20;
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;
pub const ENSEMBLE_SEEDS: u64 = 10;
pub const ENSEMBLE_CODEBOOKS: u64 = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {} {}", self.name, self.detail)
    }
}

/// A random AWGN hop with SNR log-uniform in `[0.1, 100]` and a rate uniform
/// in `[0.05 C, 0.999 C]`.
pub fn random_awgn_instance(rng: &mut impl Rng) -> (HopChannel, f64) {
    let snr = 10f64.powf(rng.random_range(-1.0..=2.0));
    let ch = HopChannel::awgn(snr).expect("positive SNR");
    let c = ch.capacity();
    let rate = rng.random_range(0.05 * c..=0.999 * c);
    (ch, rate)
}

/// Dense-grid maximization of the random-coding objective over `[0, 1]`.
pub fn grid_rc(rate: f64, ch: &HopChannel) -> Result<(f64, f64)> {
    refined_grid_max_exponent(rate, ch, &GridSpec::new(0.0, 1.0, 1e-4)?, 1e-9)
}

/// Dense-grid maximization of the sphere-packing objective over
/// `[0, SP_GRID_RHO_MAX]`.
pub fn grid_sp(rate: f64, ch: &HopChannel) -> Result<(f64, f64)> {
    refined_grid_max_exponent(rate, ch, &GridSpec::new(0.0, SP_GRID_RHO_MAX, 1e-2)?, 1e-9)
}

pub fn grid_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for k in 0..GRID_INSTANCES {
        let (ch, rate) = random_awgn_instance(&mut rng);
        let rc = random_coding_exponent(rate, &ch)?;
        let sp = sphere_packing_exponent(rate, &ch)?;
        let (g_rc, _) = grid_rc(rate, &ch)?;
        let (g_sp, _) = grid_sp(rate, &ch)?;
        let d_rc = (rc.exponent - g_rc).abs();
        let d_sp = (sp.exponent - g_sp).abs();
        checks.push(Check::new(
            format!("grid[{k}]"),
            d_rc <= GRID_TOLERANCE && d_sp <= GRID_TOLERANCE,
            format!("rate={rate:.6} |dE_r|={d_rc:.2e} |dE_sp|={d_sp:.2e}"),
        ));
    }
    Ok(checks)
}

fn objective(exponents: &[f64], blocks: &[u64]) -> f64 {
    let args: Vec<f64> = blocks
        .iter()
        .zip(exponents)
        .map(|(&q, &e)| -(q as f64) * e)
        .collect();
    log_sum_exp(&args)
}

pub fn alloc_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for k in 0..ALLOC_INSTANCES {
        let n = rng.random_range(2..=3usize);
        let q = rng.random_range(n as u64 * 4..=60);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        let split = reliability_optimal_blocks(&e, q)?;
        let (best, best_obj) = exhaustive_allocation(&e, q)?;
        let ours = objective(&e, &split.blocklengths);
        checks.push(Check::new(
            format!("exhaustive[{k}]"),
            split.blocklengths == best || ours == best_obj,
            format!("Q={q} ours={:?} enumerated={best:?}", split.blocklengths),
        ));
        let residual = stationarity_residual(&e, &split.real_blocks);
        checks.push(Check::new(
            format!("stationarity[{k}]"),
            residual <= STATIONARITY_TOLERANCE,
            format!("spread={residual:.2e}"),
        ));
    }
    let hops = [HopChannel::awgn_db(9.0)?, HopChannel::awgn_db(6.0)?];
    let caps: Vec<f64> = hops.iter().map(HopChannel::capacity).collect();
    let share = optimal_time_share(&caps)?;
    let total = 1000u64;
    let split = information_continuous_blocks(&caps, total)?;
    let worst = split
        .blocklengths
        .iter()
        .zip(&share.lambdas)
        .map(|(&q, &l)| (q as f64 / total as f64 - l).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "time_share[9dB,6dB]",
        worst <= 1.0 / total as f64,
        format!("blocks={:?} max|Q_n/Q - lambda_n|={worst:.2e}", split.blocklengths),
    ));
    Ok(checks)
}

/// Ensemble check on BSC(0.05) with 4 codewords of length 8, over seeds
/// `seed..seed + ENSEMBLE_SEEDS`.
pub fn ensemble_suite(seed: u64) -> Result<Vec<Check>> {
    let (n, m, p) = (8usize, 4usize, 0.05);
    let rate = (m as f64).ln() / n as f64;
    let er = random_coding_exponent(rate, &HopChannel::bsc(p)?)?.exponent;
    let bound = (-(n as f64) * er).exp();
    let mut checks = Vec::new();
    for s in seed..seed + ENSEMBLE_SEEDS {
        let est = bsc_ensemble_error(n, m, p, ENSEMBLE_CODEBOOKS, s)?;
        checks.push(Check::new(
            format!("ensemble[seed={s}]"),
            est.mean <= bound + 3.0 * est.stderr,
            format!(
                "mean={:.6} stderr={:.6} bound={bound:.6}",
                est.mean, est.stderr
            ),
        ));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alloc_suite_passes() {
        let checks = alloc_suite(1).unwrap();
        assert_eq!(checks.len(), 2 * ALLOC_INSTANCES + 1);
        for c in &checks {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn check_line_format() {
        let c = Check::new("x", false, "d");
        assert_eq!(c.line(), "FAIL x d");
    }
}
