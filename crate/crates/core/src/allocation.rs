//! Dividing the end-to-end budget of `Q` channel uses among the hops.
//!
//! Three rules are provided: capacity-optimal time sharing, reliability-optimal
//! (error-balancing) blocklengths from the Lagrange conditions, and the
//! information-continuous split that fixes a common codebook size `M` on every
//! hop. Real-valued solutions are turned into integer blocklengths that sum to
//! `Q` exactly with every hop receiving at least one channel use.

use serde::Serialize;

use crate::error::{Error, Result};

/// `ln M` beyond which `M` is not materialized.
pub const LN_M_MATERIALIZE_LIMIT: f64 = 700.0;

/// Relative slack used when flooring real blocklengths, so that rounding
/// residue just below an integer does not cost a whole channel use.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ReliabilityOptimalRc,
    ReliabilityOptimalSp,
    InformationContinuous,
    Manual,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ReliabilityOptimalRc => "reliability_optimal_rc",
            Method::ReliabilityOptimalSp => "reliability_optimal_sp",
            Method::InformationContinuous => "info_continuous",
            Method::Manual => "manual",
        }
    }
}

/// Integer blocklengths and per-hop rates for one transmission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub blocklengths: Vec<u64>,
    pub rates: Vec<f64>,
    pub end_to_end_rate: f64,
    pub method: Method,
}

impl Allocation {
    pub fn new(blocklengths: Vec<u64>, rates: Vec<f64>, method: Method) -> Result<Self> {
        if blocklengths.is_empty() {
            return Err(Error::domain("allocation needs at least one hop"));
        }
        if blocklengths.len() != rates.len() {
            return Err(Error::domain(format!(
                "{} blocklengths for {} rates",
                blocklengths.len(),
                rates.len()
            )));
        }
        if let Some(n) = blocklengths.iter().position(|&q| q == 0) {
            return Err(Error::infeasible(Some(n), "blocklength must be at least 1"));
        }
        if let Some(n) = rates.iter().position(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::infeasible(Some(n), "rate must be positive"));
        }
        let end_to_end_rate = end_to_end_rate(&blocklengths, &rates);
        Ok(Allocation {
            blocklengths,
            rates,
            end_to_end_rate,
            method,
        })
    }

    pub fn total(&self) -> u64 {
        self.blocklengths.iter().sum()
    }

    pub fn num_hops(&self) -> usize {
        self.blocklengths.len()
    }
}

/// `(1/Q) min_n Q_n R_n` with `Q = sum Q_n`.
pub fn end_to_end_rate(blocklengths: &[u64], rates: &[f64]) -> f64 {
    let total: u64 = blocklengths.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let min_info = blocklengths
        .iter()
        .zip(rates)
        .map(|(&q, &r)| q as f64 * r)
        .fold(f64::INFINITY, f64::min);
    min_info / total as f64
}

/// Capacity-optimal fractions of time per hop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeShare {
    pub lambdas: Vec<f64>,
    pub network_rate: f64,
}

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::domain(format!("no {what} given")));
    }
    match values.iter().position(|v| !v.is_finite() || *v <= 0.0) {
        Some(n) => Err(Error::infeasible(
            Some(n),
            format!("{what} must be positive, got {}", values[n]),
        )),
        None => Ok(()),
    }
}

/// `lambda_n = (1/I_n) / sum_k (1/I_k)`; the network rate is the harmonic
/// form `1 / sum_k (1/I_k)`.
pub fn optimal_time_share(capacities: &[f64]) -> Result<TimeShare> {
    check_positive(capacities, "capacity")?;
    let inv_sum: f64 = capacities.iter().map(|c| 1.0 / c).sum();
    Ok(TimeShare {
        lambdas: capacities.iter().map(|c| (1.0 / c) / inv_sum).collect(),
        network_rate: 1.0 / inv_sum,
    })
}

/// Network capacity `1 / sum_n (1/I_n)`.
pub fn network_capacity(capacities: &[f64]) -> Result<f64> {
    optimal_time_share(capacities).map(|t| t.network_rate)
}

/// Per-hop link metrics `1/E` and `ln(E)/E` used by the Lagrange solution.
/// Shared with the distributed protocol so that both paths perform the same
/// floating-point operations.
pub fn exponent_metrics(exponent: f64) -> (f64, f64) {
    (1.0 / exponent, exponent.ln() / exponent)
}

/// Lagrange constant `(sum ln(E)/E - Q) / sum 1/E` from accumulated metrics.
pub fn lagrange_constant(inv_exp_sum: f64, log_over_exp_sum: f64, total: u64) -> f64 {
    (log_over_exp_sum - total as f64) / inv_exp_sum
}

/// Real-valued reliability-optimal blocklength `(ln E - lambda) / E`.
pub fn reliability_block(exponent: f64, lagrange: f64) -> f64 {
    (exponent.ln() - lagrange) / exponent
}

/// Floors a real blocklength, forgiving rounding residue just below an integer.
pub fn floor_blocks(x: f64) -> i64 {
    (x + FLOOR_SLACK * x.abs().max(1.0)).floor() as i64
}

/// Output of the reliability-optimal (error-balancing) split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilitySplit {
    pub lagrange: f64,
    pub real_blocks: Vec<f64>,
    pub floors: Vec<i64>,
    pub blocklengths: Vec<u64>,
}

impl ReliabilitySplit {
    pub fn into_allocation(self, rates: Vec<f64>, method: Method) -> Result<Allocation> {
        Allocation::new(self.blocklengths, rates, method)
    }
}

/// Minimizes `sum_n exp(-Q_n E_n)` subject to `sum_n Q_n = Q`, `Q_n >= 1`.
///
/// The stationary point `Q_n = (ln E_n - lambda)/E_n` is floored, topped up by
/// largest remainder, and then polished with single-unit exchanges between
/// hops until none lowers the objective. The objective is separable and
/// convex, so an exchange-stable integer point is a global integer optimum.
pub fn reliability_optimal_blocks(exponents: &[f64], total: u64) -> Result<ReliabilitySplit> {
    check_positive(exponents, "exponent")?;
    let n = exponents.len();
    if total < n as u64 {
        return Err(Error::infeasible(
            None,
            format!("budget of {total} channel uses cannot cover {n} hops"),
        ));
    }
    let mut inv_sum = 0.0;
    let mut log_sum = 0.0;
    for &e in exponents {
        let (inv, log_over) = exponent_metrics(e);
        inv_sum += inv;
        log_sum += log_over;
    }
    let lagrange = lagrange_constant(inv_sum, log_sum, total);
    let real_blocks: Vec<f64> = exponents
        .iter()
        .map(|&e| reliability_block(e, lagrange))
        .collect();
    let floors: Vec<i64> = real_blocks.iter().map(|&x| floor_blocks(x)).collect();

    let start: Vec<i64> = floors.iter().map(|&f| f.max(1)).collect();
    let mut blocks = settle_sum(&start, &real_blocks, total);
    exchange_polish(&mut blocks, exponents);

    Ok(ReliabilitySplit {
        lagrange,
        real_blocks,
        floors,
        blocklengths: blocks,
    })
}

/// `max_n - min_n` of `Q_n E_n - ln E_n`; zero at the real-valued optimum.
pub fn stationarity_residual(exponents: &[f64], blocks: &[f64]) -> f64 {
    let vals: Vec<f64> = exponents
        .iter()
        .zip(blocks)
        .map(|(&e, &q)| q * e - e.ln())
        .collect();
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Order of hops by descending fractional remainder, ties to the lower index.
fn remainder_order(real: &[f64], base: &[i64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..real.len()).collect();
    let rem: Vec<f64> = real.iter().zip(base).map(|(&x, &b)| x - b as f64).collect();
    order.sort_by(|&a, &b| rem[b].total_cmp(&rem[a]).then(a.cmp(&b)));
    order
}

/// Brings a starting integer point (every entry >= 1) to sum exactly `total`.
/// Missing units go one at a time to hops in descending remainder order,
/// cycling if more units than hops are missing; surplus units are taken from
/// the hops with the smallest remainder that can spare them.
fn settle_sum(start: &[i64], real: &[f64], total: u64) -> Vec<u64> {
    let mut blocks = start.to_vec();
    let order = remainder_order(real, start);
    let sum: i64 = blocks.iter().sum();
    let total = total as i64;
    if sum < total {
        for k in 0..(total - sum) as usize {
            blocks[order[k % order.len()]] += 1;
        }
    } else {
        let mut surplus = sum - total;
        while surplus > 0 {
            // callers guarantee total >= N, so some hop can always give
            if let Some(&i) = order.iter().rev().find(|&&i| blocks[i] > 1) {
                blocks[i] -= 1;
                surplus -= 1;
            }
        }
    }
    blocks.into_iter().map(|b| b as u64).collect()
}

/// Whether moving one channel use from hop `from` to hop `to` strictly lowers
/// `exp(-Q_from E_from) + exp(-Q_to E_to)`. Evaluated with a common shift.
fn exchange_improves(blocks: &[u64], exponents: &[f64], from: usize, to: usize) -> bool {
    let a_from = blocks[from] as f64 * exponents[from];
    let a_to = blocks[to] as f64 * exponents[to];
    let b_from = a_from - exponents[from];
    let b_to = a_to + exponents[to];
    let shift = a_from.min(a_to).min(b_from).min(b_to);
    let before = (shift - a_from).exp() + (shift - a_to).exp();
    let after = (shift - b_from).exp() + (shift - b_to).exp();
    after < before
}

fn exchange_polish(blocks: &mut [u64], exponents: &[f64]) {
    let n = blocks.len();
    loop {
        let mut moved = false;
        for from in 0..n {
            for to in 0..n {
                while from != to
                    && blocks[from] > 1
                    && exchange_improves(blocks, exponents, from, to)
                {
                    blocks[from] -= 1;
                    blocks[to] += 1;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// Common codebook size `M` shared by all hops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodebookSize {
    /// `ln M`; when `M` is not materialized this is `Q / sum 1/R_n` itself.
    pub ln_m: f64,
    /// `M = floor(exp(Q / sum 1/R_n))`, absent above the overflow guard.
    pub m: Option<f64>,
}

/// Codebook size from the accumulated route cost `sum_n 1/R_n`.
pub fn codebook_size(total: u64, inv_rate_sum: f64) -> CodebookSize {
    let x = total as f64 / inv_rate_sum;
    if x > LN_M_MATERIALIZE_LIMIT {
        CodebookSize { ln_m: x, m: None }
    } else {
        let m = x.exp().floor();
        CodebookSize {
            ln_m: if m >= 1.0 { m.ln() } else { f64::NEG_INFINITY },
            m: Some(m),
        }
    }
}

/// Output of the information-continuous split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoContinuousSplit {
    pub codebook: CodebookSize,
    pub real_blocks: Vec<f64>,
    pub floors: Vec<i64>,
    pub blocklengths: Vec<u64>,
}

impl InfoContinuousSplit {
    pub fn into_allocation(self, rates: Vec<f64>) -> Result<Allocation> {
        Allocation::new(self.blocklengths, rates, Method::InformationContinuous)
    }
}

/// Fixes `M_n = M` on every hop: `Q_n = floor(ln M / R_n)` with
/// `M = floor(exp(Q / sum 1/R_n))`; channel uses left over by the flooring go
/// out by largest fractional remainder.
pub fn information_continuous_blocks(rates: &[f64], total: u64) -> Result<InfoContinuousSplit> {
    check_positive(rates, "rate")?;
    let n = rates.len();
    if total < n as u64 {
        return Err(Error::infeasible(
            None,
            format!("budget of {total} channel uses cannot cover {n} hops"),
        ));
    }
    let inv_rate_sum: f64 = rates.iter().map(|r| 1.0 / r).sum();
    let codebook = codebook_size(total, inv_rate_sum);
    if codebook.m.is_some_and(|m| m < 2.0) {
        return Err(Error::infeasible(
            None,
            "budget too small for a codebook of two or more codewords",
        ));
    }
    let real_blocks: Vec<f64> = rates.iter().map(|r| codebook.ln_m / r).collect();
    let floors: Vec<i64> = real_blocks.iter().map(|&x| floor_blocks(x)).collect();
    let start: Vec<i64> = floors.iter().map(|&f| f.max(0)).collect();
    let blocklengths = {
        let mut blocks = start.clone();
        let order = remainder_order(&real_blocks, &start);
        let left = total as i64 - blocks.iter().sum::<i64>();
        for k in 0..left.max(0) as usize {
            blocks[order[k % n]] += 1;
        }
        blocks.into_iter().map(|b| b as u64).collect::<Vec<_>>()
    };
    if let Some(hop) = blocklengths.iter().position(|&q| q == 0) {
        return Err(Error::infeasible(Some(hop), "hop receives no channel uses"));
    }
    Ok(InfoContinuousSplit {
        codebook,
        real_blocks,
        floors,
        blocklengths,
    })
}

/// Per-hop rates `R_n = beta I_n` with `beta = target * sum 1/I_n`, so that
/// the information-continuous split reaches the target end-to-end rate.
/// A target equal to the network capacity (within rounding) gives `beta = 1`.
pub fn rate_policy_scale(capacities: &[f64], target_rate: f64) -> Result<Vec<f64>> {
    check_positive(capacities, "capacity")?;
    if !target_rate.is_finite() || target_rate <= 0.0 {
        return Err(Error::domain(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    let inv_sum: f64 = capacities.iter().map(|c| 1.0 / c).sum();
    let beta = target_rate * inv_sum;
    if beta > 1.0 + 1e-12 {
        return Err(Error::infeasible(
            None,
            format!(
                "target rate {target_rate} exceeds network capacity {}",
                1.0 / inv_sum
            ),
        ));
    }
    let beta = beta.min(1.0);
    Ok(capacities.iter().map(|c| beta * c).collect())
}
