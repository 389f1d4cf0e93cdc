//! End-to-end error probability bounds for a fixed allocation.
//!
//! The system error probability is the sum of the per-hop error
//! probabilities. Each summand is bounded above by `exp(-Q_n E_r,n)` and,
//! exponent-only, below by `exp(-Q_n E_sp,n)`; the sub-exponential correction
//! of the sphere-packing bound is not modelled, so the lower bound is an
//! asymptotic one.

use serde::Serialize;

use crate::allocation::Allocation;
use crate::channel::HopChannel;
use crate::error::{Error, Result};
use crate::exponents::{random_coding_exponent, sphere_packing_exponent, ExponentResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemBounds {
    /// `sum_n exp(-Q_n E_r,n)`; may exceed 1.
    pub pe_upper: f64,
    /// `sum_n exp(-Q_n E_sp,n)`, exponent-only.
    pub pe_lower: f64,
    pub pe_upper_clamped: f64,
    pub pe_lower_clamped: f64,
    /// System reliability from the random-coding exponents (lower bound).
    pub esys_lower: f64,
    /// System reliability from the sphere-packing exponents (upper bound).
    pub esys_upper: f64,
    pub per_hop_pe_upper: Vec<f64>,
    pub per_hop_pe_lower: Vec<f64>,
    pub per_hop_rc: Vec<ExponentResult>,
    pub per_hop_sp: Vec<ExponentResult>,
    /// Set when some hop runs at or above its capacity.
    pub degenerate: bool,
    pub lower_bound_is_asymptotic: bool,
}

/// `ln sum_n exp(x_n)` with max subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `-(1/Q) ln sum_n exp(-Q_n E_n)` evaluated at finite `Q`.
pub fn system_reliability(blocklengths: &[u64], exponents: &[f64]) -> f64 {
    let total: u64 = blocklengths.iter().sum();
    let args: Vec<f64> = blocklengths
        .iter()
        .zip(exponents)
        .map(|(&q, &e)| -(q as f64) * e)
        .collect();
    -log_sum_exp(&args) / total as f64
}

pub fn system_error_bounds(alloc: &Allocation, hops: &[HopChannel]) -> Result<SystemBounds> {
    if hops.len() != alloc.num_hops() {
        return Err(Error::domain(format!(
            "allocation has {} hops but {} channels were given",
            alloc.num_hops(),
            hops.len()
        )));
    }
    let mut per_hop_rc = Vec::with_capacity(hops.len());
    let mut per_hop_sp = Vec::with_capacity(hops.len());
    let mut degenerate = false;
    for (n, (ch, &rate)) in hops.iter().zip(&alloc.rates).enumerate() {
        let rc = random_coding_exponent(rate, ch).map_err(|e| e.at_hop(n))?;
        let sp = sphere_packing_exponent(rate, ch).map_err(|e| e.at_hop(n))?;
        degenerate |= rate >= ch.capacity();
        per_hop_rc.push(rc);
        per_hop_sp.push(sp);
    }
    let e_rc: Vec<f64> = per_hop_rc.iter().map(|r| r.exponent).collect();
    let e_sp: Vec<f64> = per_hop_sp.iter().map(|r| r.exponent).collect();
    let per_hop = |exps: &[f64]| -> Vec<f64> {
        alloc
            .blocklengths
            .iter()
            .zip(exps)
            .map(|(&q, &e)| (-(q as f64) * e).exp())
            .collect()
    };
    let per_hop_pe_upper = per_hop(&e_rc);
    let per_hop_pe_lower = per_hop(&e_sp);
    let pe_upper: f64 = per_hop_pe_upper.iter().sum();
    let pe_lower: f64 = per_hop_pe_lower.iter().sum();
    Ok(SystemBounds {
        pe_upper,
        pe_lower,
        pe_upper_clamped: pe_upper.min(1.0),
        pe_lower_clamped: pe_lower.min(1.0),
        esys_lower: system_reliability(&alloc.blocklengths, &e_rc),
        esys_upper: system_reliability(&alloc.blocklengths, &e_sp),
        per_hop_pe_upper,
        per_hop_pe_lower,
        per_hop_rc,
        per_hop_sp,
        degenerate,
        lower_bound_is_asymptotic: true,
    })
}

pub use crate::allocation::end_to_end_rate;
