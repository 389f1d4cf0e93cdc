//! Random-coding and sphere-packing exponents of a single hop.
//!
//! Both exponents maximize `E0(rho) - rho R`; they differ only in the range
//! of `rho` (`[0, 1]` for random coding, `(0, inf)` for sphere packing). The
//! maximizer solves `dE0/drho = R`, and since `dE0/drho` is strictly
//! decreasing in `rho` we locate it by bisection.

use serde::Serialize;

use crate::channel::HopChannel;
use crate::error::{Error, Result};

/// Upper limit on the sphere-packing maximizer.
pub const RHO_MAX: f64 = 1e6;

/// Absolute tolerance on `rho` in the bisection.
pub const RHO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `rho*` solves `dE0/drho = R` inside the admissible range.
    ParametricInterior,
    /// Rate below the critical rate: the random-coding maximizer sits at 1.
    RhoClampedAtOne,
    /// Rate at or above capacity; the exponent vanishes.
    ZeroAboveCapacity,
    /// Sphere-packing maximizer would exceed [`RHO_MAX`].
    RhoCapped,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ParametricInterior => "parametric_interior",
            Regime::RhoClampedAtOne => "rho_clamped_at_one",
            Regime::ZeroAboveCapacity => "zero_above_capacity",
            Regime::RhoCapped => "rho_capped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentResult {
    pub exponent: f64,
    pub rho_star: f64,
    pub regime: Regime,
}

impl ExponentResult {
    fn zero() -> Self {
        ExponentResult {
            exponent: 0.0,
            rho_star: 0.0,
            regime: Regime::ZeroAboveCapacity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalRate {
    pub r_cr: f64,
}

/// `E0(rho) - rho * rate`, clipped at zero.
fn objective(ch: &HopChannel, rho: f64, rate: f64) -> Result<f64> {
    Ok((ch.e0(rho)? - rho * rate).max(0.0))
}

/// Finds `rho` in `[lo, hi]` with `dE0/drho(rho) = rate`, given that the
/// derivative exceeds `rate` at `lo` and does not at `hi`.
fn bisect_slope(ch: &HopChannel, rate: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    while hi - lo > RHO_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ch.e0_derivative(mid)? > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rate must be nonnegative, got {rate}")))
    }
}

/// Random-coding exponent `E_r(R) = max_{0<=rho<=1} [E0(rho) - rho R]`.
pub fn random_coding_exponent(rate: f64, ch: &HopChannel) -> Result<ExponentResult> {
    check_rate(rate)?;
    if rate >= ch.capacity() {
        return Ok(ExponentResult::zero());
    }
    let r_at_one = ch.e0_derivative(1.0)?;
    if rate < r_at_one {
        return Ok(ExponentResult {
            exponent: ch.e0(1.0)? - rate,
            rho_star: 1.0,
            regime: Regime::RhoClampedAtOne,
        });
    }
    let rho = bisect_slope(ch, rate, 0.0, 1.0)?;
    Ok(ExponentResult {
        exponent: objective(ch, rho, rate)?,
        rho_star: rho,
        regime: Regime::ParametricInterior,
    })
}

/// Sphere-packing exponent `E_sp(R) = sup_{rho>0} [E0(rho) - rho R]`.
///
/// Only defined for `rate > 0`: the maximizer diverges as the rate vanishes.
pub fn sphere_packing_exponent(rate: f64, ch: &HopChannel) -> Result<ExponentResult> {
    check_rate(rate)?;
    if rate == 0.0 {
        return Err(Error::domain(
            "sphere-packing exponent requires a positive rate",
        ));
    }
    if rate >= ch.capacity() {
        return Ok(ExponentResult::zero());
    }
    // geometric bracket expansion
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ch.e0_derivative(hi)? > rate {
        if hi >= RHO_MAX {
            return Ok(ExponentResult {
                exponent: objective(ch, RHO_MAX, rate)?,
                rho_star: RHO_MAX,
                regime: Regime::RhoCapped,
            });
        }
        lo = hi;
        hi = (hi * 2.0).min(RHO_MAX);
    }
    let rho = bisect_slope(ch, rate, lo, hi)?;
    Ok(ExponentResult {
        exponent: objective(ch, rho, rate)?,
        rho_star: rho,
        regime: Regime::ParametricInterior,
    })
}

/// `dE0/drho` at `rho = 1`, the smallest rate where both exponents agree.
pub fn critical_rate(ch: &HopChannel) -> Result<CriticalRate> {
    let r_cr = ch.e0_derivative(1.0)?.max(0.0).min(ch.capacity());
    Ok(CriticalRate { r_cr })
}

/// Closed-form Gaussian-input AWGN quantities at a given `rho`:
/// the exponent `rho^2 snr / ((1+rho)(1+rho+snr))` and the matching rate.
pub fn awgn_parametric(rho: f64, snr: f64) -> (f64, f64) {
    let u = 1.0 + rho;
    let exponent = rho * rho * snr / (u * (u + snr));
    let rate = (snr / u).ln_1p() - rho * snr / (u * (u + snr));
    (exponent, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn awgn(snr: f64) -> HopChannel {
        HopChannel::awgn(snr).unwrap()
    }

    #[test]
    fn rate_at_capacity_gives_zero() {
        let r = random_coding_exponent(LN_2, &awgn(1.0)).unwrap();
        assert_eq!(r.exponent, 0.0);
        assert_eq!(r.rho_star, 0.0);
        assert_eq!(r.regime, Regime::ZeroAboveCapacity);
        let s = sphere_packing_exponent(2.0, &awgn(1.0)).unwrap();
        assert_eq!(s.regime, Regime::ZeroAboveCapacity);
        assert_eq!(s.exponent, 0.0);
    }

    #[test]
    fn clamped_regime_below_critical_rate() {
        let r = random_coding_exponent(0.1, &awgn(1.0)).unwrap();
        assert_eq!(r.regime, Regime::RhoClampedAtOne);
        assert_eq!(r.rho_star, 1.0);
        assert_abs_diff_eq!(r.exponent, 1.5f64.ln() - 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.exponent, 0.305_465_108_108_164_4, epsilon = 1e-12);
    }

    #[test]
    fn critical_rate_closed_form() {
        let r = critical_rate(&awgn(1.0)).unwrap().r_cr;
        assert_abs_diff_eq!(r, 1.5f64.ln() - 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.238_798_441_441_497_7, epsilon = 1e-12);
        assert!(critical_rate(&awgn(1e-9)).unwrap().r_cr < 1e-9);
        // generic SNR: ln(1 + snr/2) - snr / (2 (2 + snr))
        let snr = 7.3;
        assert_abs_diff_eq!(
            critical_rate(&awgn(snr)).unwrap().r_cr,
            (1.0 + snr / 2.0).ln() - snr / (2.0 * (2.0 + snr)),
            epsilon = 1e-14
        );
    }

    #[test]
    fn exponents_agree_at_and_above_critical_rate() {
        let ch = awgn(1.0);
        let r_cr = critical_rate(&ch).unwrap().r_cr;
        let er = random_coding_exponent(r_cr, &ch).unwrap();
        let esp = sphere_packing_exponent(r_cr, &ch).unwrap();
        assert_abs_diff_eq!(er.exponent, esp.exponent, epsilon = 1e-12);
        let er = random_coding_exponent(0.5, &ch).unwrap();
        let esp = sphere_packing_exponent(0.5, &ch).unwrap();
        assert_eq!(er.regime, Regime::ParametricInterior);
        assert_abs_diff_eq!(er.exponent, esp.exponent, epsilon = 1e-12);
        assert_abs_diff_eq!(er.rho_star, esp.rho_star, epsilon = 1e-10);
    }

    #[test]
    fn parametric_form_matches_awgn_closed_form() {
        let snr = 3.0;
        for rho in [0.1, 0.4, 0.9] {
            let (e, r) = awgn_parametric(rho, snr);
            let res = random_coding_exponent(r, &awgn(snr)).unwrap();
            assert_abs_diff_eq!(res.rho_star, rho, epsilon = 1e-10);
            assert_abs_diff_eq!(res.exponent, e, epsilon = 1e-12);
        }
        for rho in [2.0, 15.0, 300.0] {
            let (e, r) = awgn_parametric(rho, snr);
            let res = sphere_packing_exponent(r, &awgn(snr)).unwrap();
            assert_abs_diff_eq!(res.rho_star, rho, epsilon = 1e-6 * rho);
            assert_abs_diff_eq!(res.exponent, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn sphere_packing_rejects_zero_rate() {
        assert!(sphere_packing_exponent(0.0, &awgn(1.0)).is_err());
        assert!(random_coding_exponent(-1e-3, &awgn(1.0)).is_err());
    }

    #[test]
    fn sphere_packing_dominates_at_low_rate() {
        let ch = awgn(1.0);
        let esp = sphere_packing_exponent(0.05, &ch).unwrap();
        let er = random_coding_exponent(0.05, &ch).unwrap();
        assert!(esp.exponent > er.exponent);
        assert!(esp.rho_star > 1.0);
    }

    #[test]
    fn noiseless_bsc_caps_rho() {
        let ch = HopChannel::bsc(0.0).unwrap();
        let esp = sphere_packing_exponent(0.3, &ch).unwrap();
        assert_eq!(esp.regime, Regime::RhoCapped);
        assert_eq!(esp.rho_star, RHO_MAX);
        assert_abs_diff_eq!(esp.exponent, RHO_MAX * (LN_2 - 0.3), epsilon = 1e-3);
    }

    #[test]
    fn tiny_rate_intercept() {
        let ch = awgn(1.0);
        let er = random_coding_exponent(1e-12, &ch).unwrap();
        assert_abs_diff_eq!(er.exponent, 1.5f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn bsc_critical_rate_is_slope_at_one() {
        let ch = HopChannel::bsc(0.1).unwrap();
        let h = 1e-6;
        let fd = (ch.e0(1.0 + h).unwrap() - ch.e0(1.0 - h).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(critical_rate(&ch).unwrap().r_cr, fd, epsilon = 1e-8);
    }
}
