//! Rate sweeps behind `hopbound reproduce`.
//!
//! Three schemes are swept at a total budget of `FIG_Q` channel uses: one
//! hop at 0 dB, and two hops at 9 dB and 6 dB with either reliability-optimal
//! (random-coding) or information-continuous blocklengths. Per-hop rates come
//! from the target-rate policy, and each row is keyed by the nominal
//! end-to-end rate `1 / sum_n 1/R_n` of those rates, so that both two-hop
//! schemes are compared at identical per-hop rates.

use serde::Serialize;

use crate::allocation::{rate_policy_scale, Allocation, Method};
use crate::arq::{latency_bounds, simulate_latency_with_workers};
use crate::channel::HopChannel;
use crate::error::Result;
use crate::scenario::allocate;
use crate::system::system_error_bounds;

pub const FIG_Q: u64 = 1000;
pub const SINGLE_HOP_SNR_DB: f64 = 0.0;
pub const TWO_HOP_SNR_DB: [f64; 2] = [9.0, 6.0];
pub const SWEEP_POINTS: usize = 80;
pub const SWEEP_MIN_RATE: f64 = 0.02;
pub const SWEEP_MAX_FRACTION: f64 = 0.98;
pub const FIG4_TRIALS: u64 = 100_000;
pub const FIG4_SEED: u64 = 20240101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SingleHop,
    TwoHopRelopt,
    TwoHopInfoCont,
}

impl Scheme {
    pub fn snr_db(self) -> &'static [f64] {
        match self {
            Scheme::SingleHop => &[SINGLE_HOP_SNR_DB],
            _ => &TWO_HOP_SNR_DB,
        }
    }

    pub fn channels(self) -> Vec<HopChannel> {
        self.snr_db()
            .iter()
            .map(|&db| HopChannel::awgn_db(db).expect("fixed SNRs are valid"))
            .collect()
    }

    pub fn method(self) -> Method {
        match self {
            Scheme::TwoHopInfoCont => Method::InformationContinuous,
            _ => Method::ReliabilityOptimalRc,
        }
    }

    /// `1 / sum_n 1/C_n` over the scheme's hops.
    pub fn capacity(self) -> f64 {
        let inv: f64 = self.channels().iter().map(|c| 1.0 / c.capacity()).sum();
        1.0 / inv
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::SingleHop => "single_hop",
            Scheme::TwoHopRelopt => "two_hop_relopt",
            Scheme::TwoHopInfoCont => "two_hop_infocont",
        }
    }
}

/// Linearly spaced target end-to-end rates from `SWEEP_MIN_RATE` to
/// `SWEEP_MAX_FRACTION * capacity`.
pub fn sweep_targets(capacity: f64) -> Vec<f64> {
    let hi = SWEEP_MAX_FRACTION * capacity;
    let steps = (SWEEP_POINTS - 1) as f64;
    (0..SWEEP_POINTS)
        .map(|k| SWEEP_MIN_RATE + (hi - SWEEP_MIN_RATE) * k as f64 / steps)
        .collect()
}

/// Allocation for one sweep point of a scheme.
pub fn scheme_allocation(scheme: Scheme, channels: &[HopChannel], target: f64) -> Result<Allocation> {
    let caps: Vec<f64> = channels.iter().map(HopChannel::capacity).collect();
    let rates = rate_policy_scale(&caps, target)?;
    Ok(allocate(channels, &rates, FIG_Q, scheme.method(), None)?.allocation)
}

/// `1 / sum_n 1/R_n`.
pub fn nominal_rate(rates: &[f64]) -> f64 {
    1.0 / rates.iter().map(|r| 1.0 / r).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub target_rate: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig3Row {
    pub end_to_end_rate: f64,
    pub esys_rc: f64,
    pub esys_sp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig4Row {
    pub end_to_end_rate: f64,
    pub latency_upper: f64,
    pub latency_lower: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    /// Largest per-hop failure bound on either side; not written to CSV.
    #[serde(skip)]
    pub max_hop_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve<R> {
    pub scheme: Scheme,
    pub rows: Vec<R>,
    pub skipped: Vec<SkippedPoint>,
}

/// Both reliability bounds of a scheme at one target rate.
pub fn fig3_point(scheme: Scheme, channels: &[HopChannel], target: f64) -> Result<Fig3Row> {
    let alloc = scheme_allocation(scheme, channels, target)?;
    let b = system_error_bounds(&alloc, channels)?;
    Ok(Fig3Row {
        end_to_end_rate: nominal_rate(&alloc.rates),
        esys_rc: b.esys_lower,
        esys_sp: b.esys_upper,
    })
}

pub fn fig3_curve(scheme: Scheme) -> Curve<Fig3Row> {
    let channels = scheme.channels();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for target in sweep_targets(scheme.capacity()) {
        match fig3_point(scheme, &channels, target) {
            Ok(row) => rows.push(row),
            Err(e) => skipped.push(SkippedPoint {
                target_rate: target,
                reason: e.to_string(),
            }),
        }
    }
    Curve {
        scheme,
        rows,
        skipped,
    }
}

/// Latency sweep; the Monte Carlo column simulates the random-coding chain.
pub fn fig4_curve(scheme: Scheme, trials: u64, seed: u64, workers: usize) -> Result<Curve<Fig4Row>> {
    let channels = scheme.channels();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for target in sweep_targets(scheme.capacity()) {
        let point = scheme_allocation(scheme, &channels, target)
            .and_then(|a| latency_bounds(&a, &channels).map(|l| (a, l)));
        let (alloc, lat) = match point {
            Ok(p) => p,
            Err(e) => {
                skipped.push(SkippedPoint {
                    target_rate: target,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let mc = simulate_latency_with_workers(&lat.upper_chain, trials, seed, workers)?;
        let max_hop_pe = lat
            .upper_chain
            .self_loop_probs()
            .iter()
            .chain(lat.lower_chain.self_loop_probs())
            .cloned()
            .fold(0.0, f64::max);
        rows.push(Fig4Row {
            end_to_end_rate: nominal_rate(&alloc.rates),
            latency_upper: lat.upper,
            latency_lower: lat.lower,
            mc_mean: mc.mc_mean,
            mc_stderr: mc.mc_stderr,
            max_hop_pe,
        });
    }
    Ok(Curve {
        scheme,
        rows,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_endpoints() {
        let t = sweep_targets(1.0);
        assert_eq!(t.len(), SWEEP_POINTS);
        assert_eq!(t[0], SWEEP_MIN_RATE);
        assert!((t[SWEEP_POINTS - 1] - 0.98).abs() < 1e-15);
    }

    #[test]
    fn single_hop_uses_whole_budget() {
        let ch = Scheme::SingleHop.channels();
        let a = scheme_allocation(Scheme::SingleHop, &ch, 0.3).unwrap();
        assert_eq!(a.blocklengths, vec![FIG_Q]);
        assert!((a.end_to_end_rate - 0.3).abs() < 1e-15);
    }
}
