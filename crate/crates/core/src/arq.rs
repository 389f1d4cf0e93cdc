//! Expected end-to-end latency with per-hop ARQ.
//!
//! The message walks states `1..=N`; on hop `n` every attempt costs `Q_n`
//! channel uses and fails with probability `P_e,n`, which stays fixed across
//! retransmissions. State `N+1` is absorbing. Feedback is free and error
//! detection is perfect.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::Allocation;
use crate::channel::HopChannel;
use crate::error::{Error, Result};
use crate::system::system_error_bounds;

/// Failure probabilities closer to 1 than this are pulled back to it.
pub const MAX_FAILURE_PROB: f64 = 1.0 - 1e-12;

/// Trials per Monte Carlo block. Blocks are the unit of work splitting and
/// are reduced in index order, so results do not depend on the worker count.
const TRIALS_PER_BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArqChain {
    self_loop_probs: Vec<f64>,
    costs: Vec<u64>,
}

impl ArqChain {
    pub fn new(self_loop_probs: Vec<f64>, costs: Vec<u64>) -> Result<Self> {
        if self_loop_probs.is_empty() || self_loop_probs.len() != costs.len() {
            return Err(Error::domain(format!(
                "chain needs matching nonempty probabilities and costs ({} vs {})",
                self_loop_probs.len(),
                costs.len()
            )));
        }
        for (hop, &p) in self_loop_probs.iter().enumerate() {
            if p.is_nan() || p < 0.0 {
                return Err(Error::domain(format!(
                    "failure probability {p} on hop {hop} is not a probability"
                )));
            }
            if p >= 1.0 {
                return Err(Error::InfiniteLatency { hop, prob: p });
            }
        }
        Ok(ArqChain {
            self_loop_probs,
            costs,
        })
    }

    /// Builds a chain from failure-probability bounds, clamping values just
    /// below 1 and rejecting anything at or above 1.
    pub fn from_bounds(probs: &[f64], costs: Vec<u64>) -> Result<Self> {
        let clamped = probs
            .iter()
            .enumerate()
            .map(|(hop, &p)| clamp_failure_prob(p).map_err(|_| Error::InfiniteLatency { hop, prob: p }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(clamped, costs)
    }

    pub fn num_hops(&self) -> usize {
        self.costs.len()
    }

    /// Number of Markov states, including the absorbing one.
    pub fn num_states(&self) -> usize {
        self.costs.len() + 1
    }

    pub fn self_loop_probs(&self) -> &[f64] {
        &self.self_loop_probs
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }
}

pub fn clamp_failure_prob(p: f64) -> Result<f64> {
    if p.is_nan() || p < 0.0 {
        Err(Error::domain(format!("{p} is not a probability")))
    } else if p >= 1.0 {
        Err(Error::domain(format!("failure probability {p} is not below 1")))
    } else {
        Ok(p.min(MAX_FAILURE_PROB))
    }
}

/// Expected remaining cost `T_n` from each state, by first-step analysis:
/// `T_n = Q_n + P_n T_n + (1 - P_n) T_{n+1}`, solved backward from
/// `T_{N+1} = 0`. The returned vector has `N + 1` entries.
pub fn backward_recursion(chain: &ArqChain) -> Vec<f64> {
    let n = chain.num_hops();
    let mut t = vec![0.0; n + 1];
    for hop in (0..n).rev() {
        let p = chain.self_loop_probs[hop];
        let q = chain.costs[hop] as f64;
        t[hop] = (q + (1.0 - p) * t[hop + 1]) / (1.0 - p);
    }
    t
}

/// `sum_n Q_n / (1 - P_n)`.
pub fn expected_latency(chain: &ArqChain) -> f64 {
    let closed: f64 = chain
        .costs
        .iter()
        .zip(&chain.self_loop_probs)
        .map(|(&q, &p)| q as f64 / (1.0 - p))
        .sum();
    let recursive = backward_recursion(chain)[0];
    debug_assert!(
        (closed - recursive).abs() <= 1e-9 * closed.abs(),
        "closed form {closed} disagrees with recursion {recursive}"
    );
    closed
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyEstimate {
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Moments { count, mean, m2 }
    }
}

/// Random stream for one trial, keyed by `(seed, trial)` only.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Total channel uses of one walk through the chain.
fn walk(chain: &ArqChain, samplers: &[Option<Geometric>], rng: &mut ChaCha8Rng) -> f64 {
    let mut total = 0u64;
    for (cost, sampler) in chain.costs.iter().zip(samplers) {
        let failures = sampler.as_ref().map_or(0, |g| g.sample(rng));
        total = total.saturating_add(failures.saturating_add(1).saturating_mul(*cost));
    }
    total as f64
}

fn samplers(chain: &ArqChain) -> Result<Vec<Option<Geometric>>> {
    chain
        .self_loop_probs
        .iter()
        .map(|&p| {
            if p == 0.0 {
                Ok(None)
            } else {
                Geometric::new(1.0 - p)
                    .map(Some)
                    .map_err(|e| Error::domain(format!("geometric sampler: {e}")))
            }
        })
        .collect()
}

fn run_block(chain: &ArqChain, samplers: &[Option<Geometric>], seed: u64, block: u64, trials: u64) -> Moments {
    let start = block * TRIALS_PER_BLOCK;
    let end = (start + TRIALS_PER_BLOCK).min(trials);
    let mut m = Moments::default();
    for trial in start..end {
        let mut rng = trial_rng(seed, trial);
        m.push(walk(chain, samplers, &mut rng));
    }
    m
}

/// Monte Carlo estimate of the latency, single worker.
pub fn simulate_latency(chain: &ArqChain, trials: u64, seed: u64) -> Result<LatencyEstimate> {
    simulate_latency_with_workers(chain, trials, seed, 1)
}

/// Monte Carlo estimate of the latency. The result is bit-identical for any
/// `workers >= 1`.
pub fn simulate_latency_with_workers(
    chain: &ArqChain,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<LatencyEstimate> {
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let samplers = samplers(chain)?;
    let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
    let partials: Vec<Moments> = if workers <= 1 {
        (0..blocks)
            .map(|b| run_block(chain, &samplers, seed, b, trials))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::domain(format!("worker pool: {e}")))?;
        pool.install(|| {
            (0..blocks)
                .into_par_iter()
                .map(|b| run_block(chain, &samplers, seed, b, trials))
                .collect()
        })
    };
    let total = partials
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let stderr = if total.count > 1 {
        (total.m2 / (total.count - 1) as f64).sqrt() / (total.count as f64).sqrt()
    } else {
        0.0
    };
    Ok(LatencyEstimate {
        analytic: expected_latency(chain),
        mc_mean: total.mean,
        mc_stderr: stderr,
        trials,
        seed,
    })
}

/// Latency bounds for an allocation: `upper` uses the random-coding failure
/// bounds, `lower` the sphere-packing ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyBounds {
    pub upper: f64,
    pub lower: f64,
    pub upper_chain: ArqChain,
    pub lower_chain: ArqChain,
}

pub fn latency_bounds(alloc: &Allocation, hops: &[HopChannel]) -> Result<LatencyBounds> {
    let bounds = system_error_bounds(alloc, hops)?;
    let upper_chain = ArqChain::from_bounds(&bounds.per_hop_pe_upper, alloc.blocklengths.clone())?;
    let lower_chain = ArqChain::from_bounds(&bounds.per_hop_pe_lower, alloc.blocklengths.clone())?;
    Ok(LatencyBounds {
        upper: expected_latency(&upper_chain),
        lower: expected_latency(&lower_chain),
        upper_chain,
        lower_chain,
    })
}
