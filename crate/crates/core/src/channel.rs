//! Per-hop channel models and the Gallager `E0` function.
//!
//! Two channel families are supported: the AWGN channel with i.i.d.
//! circularly-symmetric Gaussian input, where `E0(rho) = rho ln(1 + snr/(1+rho))`
//! has a closed form, and finite discrete memoryless channels evaluated at a
//! fixed input distribution. No optimization over the input distribution is
//! performed; every quantity here is conditional on the supplied input law.
//!
//! All rates and exponents are in nats per channel use.

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite discrete memoryless channel `p(y|s)` with a fixed input law `p(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    transition: Vec<Vec<f64>>,
    input_dist: Vec<f64>,
}

impl Dmc {
    /// Builds a DMC from a row-stochastic `|S| x |Y|` matrix and an input
    /// probability vector.
    pub fn new(transition: Vec<Vec<f64>>, input_dist: Vec<f64>) -> Result<Self> {
        if transition.is_empty() {
            return Err(Error::domain("transition matrix has no rows"));
        }
        let outputs = transition[0].len();
        if outputs == 0 {
            return Err(Error::domain("transition matrix has no columns"));
        }
        for (s, row) in transition.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::domain(format!(
                    "transition row {s} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::domain(format!(
                    "transition row {s} has invalid entry {bad}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::domain(format!(
                    "transition row {s} sums to {sum}, not 1"
                )));
            }
        }
        if input_dist.len() != transition.len() {
            return Err(Error::domain(format!(
                "input distribution has {} entries for {} inputs",
                input_dist.len(),
                transition.len()
            )));
        }
        if let Some(bad) = input_dist.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::domain(format!("invalid input probability {bad}")));
        }
        let sum: f64 = input_dist.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::domain(format!(
                "input distribution sums to {sum}, not 1"
            )));
        }
        Ok(Dmc {
            transition,
            input_dist,
        })
    }

    /// Same as [`Dmc::new`] with a uniform input distribution.
    pub fn with_uniform_input(transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = transition.len().max(1);
        Self::new(transition, vec![1.0 / n as f64; n])
    }

    /// Binary symmetric channel with crossover `p` and uniform input.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("crossover {p} outside [0, 1]")));
        }
        Self::with_uniform_input(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn input_dist(&self) -> &[f64] {
        &self.input_dist
    }

    pub fn num_inputs(&self) -> usize {
        self.transition.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.transition[0].len()
    }

    /// For each output `y`, returns `g_y = sum_s p(s) p(y|s)^(1/(1+rho))` and
    /// its derivative in `rho`. Zero-probability transitions contribute
    /// nothing to either sum.
    fn tilted_columns(&self, rho: f64) -> Vec<(f64, f64)> {
        let a = 1.0 / (1.0 + rho);
        let da = -a * a;
        (0..self.num_outputs())
            .map(|y| {
                let mut g = 0.0;
                let mut dg = 0.0;
                for (row, &ps) in self.transition.iter().zip(&self.input_dist) {
                    let t = row[y];
                    if t > 0.0 && ps > 0.0 {
                        let ta = t.powf(a);
                        g += ps * ta;
                        dg += ps * ta * t.ln() * da;
                    }
                }
                (g, dg)
            })
            .collect()
    }

    /// `ln sum_y g_y^(1+rho)` and its derivative, evaluated with a
    /// max-shifted exponential so that large `rho` does not underflow.
    fn log_kernel(&self, rho: f64) -> Result<(f64, f64)> {
        let cols = self.tilted_columns(rho);
        let terms: Vec<(f64, f64)> = cols
            .iter()
            .filter(|(g, _)| *g > 0.0)
            .map(|&(g, dg)| {
                let lg = g.ln();
                ((1.0 + rho) * lg, lg + (1.0 + rho) * dg / g)
            })
            .collect();
        if terms.is_empty() {
            return Err(Error::domain("log of a zero output aggregate"));
        }
        let shift = terms
            .iter()
            .map(|t| t.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut weighted = 0.0;
        for &(v, dv) in &terms {
            let w = (v - shift).exp();
            total += w;
            weighted += w * dv;
        }
        Ok((shift + total.ln(), weighted / total))
    }

    /// Mutual information `I(S;Y)` under the fixed input law.
    pub fn mutual_information(&self) -> f64 {
        let outputs = self.num_outputs();
        let q: Vec<f64> = (0..outputs)
            .map(|y| {
                self.transition
                    .iter()
                    .zip(&self.input_dist)
                    .map(|(row, ps)| ps * row[y])
                    .sum()
            })
            .collect();
        let mut info = 0.0;
        for (row, &ps) in self.transition.iter().zip(&self.input_dist) {
            if ps == 0.0 {
                continue;
            }
            for (y, &t) in row.iter().enumerate() {
                if t > 0.0 {
                    info += ps * t * (t / q[y]).ln();
                }
            }
        }
        info.max(0.0)
    }
}

/// The channel state of one hop.
#[derive(Debug, Clone, PartialEq)]
pub enum HopChannel {
    /// AWGN with Gaussian input at a linear SNR.
    AwgnGaussianInput { snr: f64 },
    /// Finite DMC with a fixed input distribution.
    FiniteDmc(Dmc),
}

impl HopChannel {
    pub fn awgn(snr: f64) -> Result<Self> {
        check_snr(snr)?;
        Ok(HopChannel::AwgnGaussianInput { snr })
    }

    /// AWGN hop from an SNR in dB.
    pub fn awgn_db(snr_db: f64) -> Result<Self> {
        Self::awgn(db_to_linear(snr_db))
    }

    pub fn dmc(transition: Vec<Vec<f64>>, input_dist: Vec<f64>) -> Result<Self> {
        Dmc::new(transition, input_dist).map(HopChannel::FiniteDmc)
    }

    pub fn bsc(p: f64) -> Result<Self> {
        Dmc::bsc(p).map(HopChannel::FiniteDmc)
    }

    pub fn e0(&self, rho: f64) -> Result<f64> {
        match self {
            HopChannel::AwgnGaussianInput { snr } => e0_awgn(rho, *snr),
            HopChannel::FiniteDmc(dmc) => e0_dmc(rho, dmc),
        }
    }

    pub fn e0_derivative(&self, rho: f64) -> Result<f64> {
        e0_derivative(rho, self)
    }

    pub fn capacity(&self) -> f64 {
        capacity(self)
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if snr.is_finite() && snr > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("snr must be positive, got {snr}")))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rho must be nonnegative, got {rho}")))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// `E0(rho) = rho ln(1 + snr/(1+rho))` for Gaussian input on an AWGN hop.
pub fn e0_awgn(rho: f64, snr: f64) -> Result<f64> {
    check_rho(rho)?;
    check_snr(snr)?;
    Ok(rho * (snr / (1.0 + rho)).ln_1p())
}

/// Gallager's function for a finite DMC at its fixed input distribution:
/// `-ln sum_y [sum_s p(s) p(y|s)^(1/(1+rho))]^(1+rho)`.
pub fn e0_dmc(rho: f64, dmc: &Dmc) -> Result<f64> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let (log_kernel, _) = dmc.log_kernel(rho)?;
    // the kernel is at most 1; clip the rounding residue
    Ok((-log_kernel).max(0.0))
}

/// `dE0/drho`. At `rho = 0` this is the mutual information of the hop.
pub fn e0_derivative(rho: f64, ch: &HopChannel) -> Result<f64> {
    check_rho(rho)?;
    match ch {
        HopChannel::AwgnGaussianInput { snr } => {
            let snr = *snr;
            let u = 1.0 + rho;
            Ok((snr / u).ln_1p() - rho * snr / (u * (u + snr)))
        }
        HopChannel::FiniteDmc(dmc) => {
            if rho == 0.0 {
                return Ok(dmc.mutual_information());
            }
            let (_, d_log_kernel) = dmc.log_kernel(rho)?;
            Ok(-d_log_kernel)
        }
    }
}

/// Mutual information at the fixed input distribution (`ln(1+snr)` for AWGN).
pub fn capacity(ch: &HopChannel) -> f64 {
    match ch {
        HopChannel::AwgnGaussianInput { snr } => snr.ln_1p(),
        HopChannel::FiniteDmc(dmc) => dmc.mutual_information(),
    }
}

/// Samples of `E0` on an ascending grid of `rho` values.
#[derive(Debug, Clone, PartialEq)]
pub struct E0Curve {
    pub rho_grid: Vec<f64>,
    pub e0_values: Vec<f64>,
}

pub fn e0_curve(ch: &HopChannel, rho_grid: &[f64]) -> Result<E0Curve> {
    if rho_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("rho grid must be strictly ascending"));
    }
    let e0_values = rho_grid
        .iter()
        .map(|&r| ch.e0(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(E0Curve {
        rho_grid: rho_grid.to_vec(),
        e0_values,
    })
}
