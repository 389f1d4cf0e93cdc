//! Scenario documents: the JSON description of a multi-hop link that the CLI
//! ingests.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "total_q": 1000,
//!   "hops": [{"type": "awgn", "snr_db": 9.0}, {"type": "awgn", "snr_db": 6.0}],
//!   "rate_policy": {"mode": "capacity_fraction", "beta": 0.5},
//!   "allocation_method": "info_continuous"
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    information_continuous_blocks, network_capacity, rate_policy_scale,
    reliability_optimal_blocks, stationarity_residual, Allocation, Method,
};
use crate::channel::HopChannel;
use crate::exponents::{random_coding_exponent, sphere_packing_exponent};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Math(#[from] crate::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HopSpec {
    Awgn {
        snr_db: f64,
    },
    Dmc {
        transition: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        input_dist: Option<Vec<f64>>,
    },
}

impl HopSpec {
    pub fn to_channel(&self) -> crate::Result<HopChannel> {
        match self {
            HopSpec::Awgn { snr_db } => HopChannel::awgn_db(*snr_db),
            HopSpec::Dmc {
                transition,
                input_dist,
            } => {
                let input = input_dist.clone().unwrap_or_else(|| {
                    vec![1.0 / transition.len().max(1) as f64; transition.len()]
                });
                HopChannel::dmc(transition.clone(), input)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatePolicy {
    Explicit { rates_nats: Vec<f64> },
    CapacityFraction { beta: f64 },
    TargetRate { rate_nats: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    ReliabilityOptimalRc,
    ReliabilityOptimalSp,
    InfoContinuous,
    Manual,
}

impl From<MethodSpec> for Method {
    fn from(m: MethodSpec) -> Method {
        match m {
            MethodSpec::ReliabilityOptimalRc => Method::ReliabilityOptimalRc,
            MethodSpec::ReliabilityOptimalSp => Method::ReliabilityOptimalSp,
            MethodSpec::InfoContinuous => Method::InformationContinuous,
            MethodSpec::Manual => Method::Manual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub total_q: u64,
    pub hops: Vec<HopSpec>,
    pub rate_policy: RatePolicy,
    pub allocation_method: MethodSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manual_blocks: Option<Vec<u64>>,
}

/// A validated scenario with channels built and per-hop rates chosen.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub total_q: u64,
    pub channels: Vec<HopChannel>,
    pub capacities: Vec<f64>,
    pub rates: Vec<f64>,
    pub method: Method,
    pub manual_blocks: Option<Vec<u64>>,
}

/// An allocation together with the by-products of the rule that made it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    pub allocation: Allocation,
    /// Spread of `Q_n E_n - ln E_n` at the real-valued reliability optimum.
    pub stationarity_residual: Option<f64>,
    pub ln_m: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Structural checks that do not involve any channel math.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.hops.is_empty() {
            return Err(invalid("hops must not be empty"));
        }
        if self.total_q < self.hops.len() as u64 {
            return Err(invalid("total_q must be at least the number of hops"));
        }
        match &self.rate_policy {
            RatePolicy::Explicit { rates_nats } if rates_nats.len() != self.hops.len() => {
                return Err(invalid(format!(
                    "{} explicit rates for {} hops",
                    rates_nats.len(),
                    self.hops.len()
                )))
            }
            RatePolicy::CapacityFraction { beta } if !(*beta > 0.0 && *beta <= 1.0) => {
                return Err(invalid(format!("beta {beta} outside (0, 1]")))
            }
            RatePolicy::TargetRate { rate_nats } if rate_nats.is_nan() || *rate_nats <= 0.0 => {
                return Err(invalid("target rate must be positive"))
            }
            _ => {}
        }
        match (&self.allocation_method, &self.manual_blocks) {
            (MethodSpec::Manual, None) => {
                return Err(invalid("manual allocation requires manual_blocks"))
            }
            (MethodSpec::Manual, Some(blocks)) => {
                if blocks.len() != self.hops.len() {
                    return Err(invalid("manual_blocks must have one entry per hop"));
                }
                if blocks.iter().sum::<u64>() != self.total_q {
                    return Err(invalid("manual_blocks must sum to total_q"));
                }
            }
            (_, Some(_)) => {
                return Err(invalid(
                    "manual_blocks is only allowed with the manual method",
                ))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<ResolvedScenario, ScenarioError> {
        self.validate()?;
        let channels = self
            .hops
            .iter()
            .enumerate()
            .map(|(n, h)| h.to_channel().map_err(|e| e.at_hop(n)))
            .collect::<crate::Result<Vec<_>>>()?;
        let capacities: Vec<f64> = channels.iter().map(HopChannel::capacity).collect();
        let rates = match &self.rate_policy {
            RatePolicy::Explicit { rates_nats } => rates_nats.clone(),
            RatePolicy::CapacityFraction { beta } => capacities.iter().map(|c| beta * c).collect(),
            RatePolicy::TargetRate { rate_nats } => rate_policy_scale(&capacities, *rate_nats)?,
        };
        Ok(ResolvedScenario {
            total_q: self.total_q,
            channels,
            capacities,
            rates,
            method: self.allocation_method.into(),
            manual_blocks: self.manual_blocks.clone(),
        })
    }
}

impl ResolvedScenario {
    pub fn network_capacity(&self) -> crate::Result<f64> {
        network_capacity(&self.capacities)
    }

    pub fn allocate(&self) -> crate::Result<AllocationReport> {
        allocate(
            &self.channels,
            &self.rates,
            self.total_q,
            self.method,
            self.manual_blocks.as_deref(),
        )
    }
}

/// Runs the selected allocation rule on fixed per-hop rates.
pub fn allocate(
    channels: &[HopChannel],
    rates: &[f64],
    total_q: u64,
    method: Method,
    manual_blocks: Option<&[u64]>,
) -> crate::Result<AllocationReport> {
    match method {
        Method::Manual => {
            let blocks = manual_blocks
                .ok_or_else(|| crate::Error::Domain("manual allocation needs blocks".into()))?;
            Ok(AllocationReport {
                allocation: Allocation::new(blocks.to_vec(), rates.to_vec(), Method::Manual)?,
                stationarity_residual: None,
                ln_m: None,
            })
        }
        Method::InformationContinuous => {
            let split = information_continuous_blocks(rates, total_q)?;
            let ln_m = split.codebook.ln_m;
            Ok(AllocationReport {
                allocation: split.into_allocation(rates.to_vec())?,
                stationarity_residual: None,
                ln_m: Some(ln_m),
            })
        }
        Method::ReliabilityOptimalRc | Method::ReliabilityOptimalSp => {
            let exponents = channels
                .iter()
                .zip(rates)
                .enumerate()
                .map(|(n, (ch, &r))| {
                    let res = if method == Method::ReliabilityOptimalRc {
                        random_coding_exponent(r, ch)
                    } else {
                        sphere_packing_exponent(r, ch)
                    };
                    res.map(|e| e.exponent).map_err(|e| e.at_hop(n))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            let split = reliability_optimal_blocks(&exponents, total_q)?;
            let residual = stationarity_residual(&exponents, &split.real_blocks);
            Ok(AllocationReport {
                allocation: split.into_allocation(rates.to_vec(), method)?,
                stationarity_residual: Some(residual),
                ln_m: None,
            })
        }
    }
}
