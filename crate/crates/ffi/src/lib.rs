//! C ABI over `hopbound`.
//!
//! Every function returns an `HbStatus`; results go through out-pointers.
//! Channels and scenarios are opaque heap handles released with their
//! `*_free` function. Arrays are caller-owned. When a call fails, the error
//! message stays available to the same thread through
//! `hb_last_error_message` until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use hopbound::allocation::{
    information_continuous_blocks, optimal_time_share, reliability_optimal_blocks,
};
use hopbound::arq::{expected_latency, simulate_latency_with_workers, ArqChain};
use hopbound::exponents::{critical_rate, random_coding_exponent, sphere_packing_exponent};
use hopbound::scenario::{ResolvedScenario, Scenario, ScenarioError};
use hopbound::{Error, ExponentResult, HopChannel, Regime};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Infeasible = 3,
    InfiniteLatency = 4,
    InstanceTooLarge = 5,
    BufferTooSmall = 6,
    InvalidScenario = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbRegime {
    ParametricInterior = 0,
    RhoClampedAtOne = 1,
    ZeroAboveCapacity = 2,
    RhoCapped = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbExponent {
    pub exponent: f64,
    pub rho_star: f64,
    pub regime: HbRegime,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbLatencyEstimate {
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Opaque hop channel.
pub struct HbChannel(HopChannel);

/// Opaque validated scenario.
pub struct HbScenario(ResolvedScenario);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(HbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) => HbStatus::Domain,
            Error::Infeasible { .. } => HbStatus::Infeasible,
            Error::InfiniteLatency { .. } => HbStatus::InfiniteLatency,
            Error::InstanceTooLarge(_) => HbStatus::InstanceTooLarge,
        };
        Failure(status, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Math(m) => m.into(),
            other => Failure(HbStatus::InvalidScenario, other.to_string()),
        }
    }
}

type FfiResult = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(HbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> FfiResult) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            HbStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn regime(r: Regime) -> HbRegime {
    match r {
        Regime::ParametricInterior => HbRegime::ParametricInterior,
        Regime::RhoClampedAtOne => HbRegime::RhoClampedAtOne,
        Regime::ZeroAboveCapacity => HbRegime::ZeroAboveCapacity,
        Regime::RhoCapped => HbRegime::RhoCapped,
    }
}

fn exponent(r: ExponentResult) -> HbExponent {
    HbExponent {
        exponent: r.exponent,
        rho_star: r.rho_star,
        regime: regime(r.regime),
    }
}

unsafe fn store_channel(out: *mut *mut HbChannel, ch: Result<HopChannel, Error>) -> FfiResult {
    let out = out_ref(out, "out")?;
    *out = ptr::null_mut();
    *out = Box::into_raw(Box::new(HbChannel(ch?)));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// AWGN hop with Gaussian input at a linear SNR.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_awgn(snr: f64, out: *mut *mut HbChannel) -> HbStatus {
    guard(|| store_channel(out, HopChannel::awgn(snr)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_awgn_db(snr_db: f64, out: *mut *mut HbChannel) -> HbStatus {
    guard(|| store_channel(out, HopChannel::awgn_db(snr_db)))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_bsc(crossover: f64, out: *mut *mut HbChannel) -> HbStatus {
    guard(|| store_channel(out, HopChannel::bsc(crossover)))
}

/// Discrete memoryless hop. `transition` is row-major with `num_inputs` rows
/// of `num_outputs` entries; `input_dist` may be null for the uniform input.
///
/// # Safety
/// `transition` must hold `num_inputs * num_outputs` doubles, `input_dist`
/// must be null or hold `num_inputs` doubles, and `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_dmc(
    transition: *const f64,
    num_inputs: usize,
    num_outputs: usize,
    input_dist: *const f64,
    out: *mut *mut HbChannel,
) -> HbStatus {
    guard(|| {
        let cells = num_inputs
            .checked_mul(num_outputs)
            .ok_or_else(|| Failure(HbStatus::Domain, "matrix size overflows".into()))?;
        let flat = in_slice(transition, cells, "transition")?;
        let rows: Vec<Vec<f64>> = if num_outputs == 0 {
            vec![Vec::new(); num_inputs]
        } else {
            flat.chunks(num_outputs).map(<[f64]>::to_vec).collect()
        };
        let input = if input_dist.is_null() {
            vec![1.0 / num_inputs.max(1) as f64; num_inputs]
        } else {
            in_slice(input_dist, num_inputs, "input_dist")?.to_vec()
        };
        store_channel(out, HopChannel::dmc(rows, input))
    })
}

/// Releases a channel; null is ignored.
///
/// # Safety
/// `ch` must be null or come from an `hb_channel_*` constructor and not have
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_free(ch: *mut HbChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Capacity in nats per channel use.
///
/// # Safety
/// `ch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_capacity(ch: *const HbChannel, out: *mut f64) -> HbStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(ch, "channel")?.0.capacity();
        Ok(())
    })
}

/// Gallager function `E0(rho)`.
///
/// # Safety
/// `ch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_channel_e0(ch: *const HbChannel, rho: f64, out: *mut f64) -> HbStatus {
    guard(|| {
        let ch = in_ref(ch, "channel")?;
        *out_ref(out, "out")? = ch.0.e0(rho)?;
        Ok(())
    })
}

/// # Safety
/// `ch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_critical_rate(ch: *const HbChannel, out: *mut f64) -> HbStatus {
    guard(|| {
        let ch = in_ref(ch, "channel")?;
        *out_ref(out, "out")? = critical_rate(&ch.0)?.r_cr;
        Ok(())
    })
}

/// # Safety
/// `ch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_random_coding_exponent(
    ch: *const HbChannel,
    rate: f64,
    out: *mut HbExponent,
) -> HbStatus {
    guard(|| {
        let ch = in_ref(ch, "channel")?;
        *out_ref(out, "out")? = exponent(random_coding_exponent(rate, &ch.0)?);
        Ok(())
    })
}

/// # Safety
/// `ch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_sphere_packing_exponent(
    ch: *const HbChannel,
    rate: f64,
    out: *mut HbExponent,
) -> HbStatus {
    guard(|| {
        let ch = in_ref(ch, "channel")?;
        *out_ref(out, "out")? = exponent(sphere_packing_exponent(rate, &ch.0)?);
        Ok(())
    })
}

/// Capacity-optimal time fractions; writes `n` values to `lambdas` and the
/// network capacity to `network_rate` (which may be null).
///
/// # Safety
/// `capacities` and `lambdas` must hold `n` doubles; `network_rate` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_optimal_time_share(
    capacities: *const f64,
    n: usize,
    lambdas: *mut f64,
    network_rate: *mut f64,
) -> HbStatus {
    guard(|| {
        let share = optimal_time_share(in_slice(capacities, n, "capacities")?)?;
        out_slice(lambdas, n, "lambdas")?.copy_from_slice(&share.lambdas);
        if let Some(r) = network_rate.as_mut() {
            *r = share.network_rate;
        }
        Ok(())
    })
}

/// Integer blocklengths minimizing `sum_n exp(-Q_n E_n)` for `Q = total`.
///
/// # Safety
/// `exponents` and `blocks` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn hb_reliability_optimal_blocks(
    exponents: *const f64,
    n: usize,
    total: u64,
    blocks: *mut u64,
) -> HbStatus {
    guard(|| {
        let split = reliability_optimal_blocks(in_slice(exponents, n, "exponents")?, total)?;
        out_slice(blocks, n, "blocks")?.copy_from_slice(&split.blocklengths);
        Ok(())
    })
}

/// Information-continuous blocklengths; `ln_m` (nullable) receives `ln M`.
///
/// # Safety
/// `rates` and `blocks` must hold `n` elements; `ln_m` must be null or valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_information_continuous_blocks(
    rates: *const f64,
    n: usize,
    total: u64,
    blocks: *mut u64,
    ln_m: *mut f64,
) -> HbStatus {
    guard(|| {
        let split = information_continuous_blocks(in_slice(rates, n, "rates")?, total)?;
        out_slice(blocks, n, "blocks")?.copy_from_slice(&split.blocklengths);
        if let Some(l) = ln_m.as_mut() {
            *l = split.codebook.ln_m;
        }
        Ok(())
    })
}

unsafe fn chain(probs: *const f64, costs: *const u64, n: usize) -> Result<ArqChain, Failure> {
    let p = in_slice(probs, n, "failure_probs")?.to_vec();
    let c = in_slice(costs, n, "costs")?.to_vec();
    Ok(ArqChain::new(p, c)?)
}

/// Expected end-to-end latency in channel uses.
///
/// # Safety
/// `failure_probs` and `costs` must hold `n` elements; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_expected_latency(
    failure_probs: *const f64,
    costs: *const u64,
    n: usize,
    out: *mut f64,
) -> HbStatus {
    guard(|| {
        let chain = chain(failure_probs, costs, n)?;
        *out_ref(out, "out")? = expected_latency(&chain);
        Ok(())
    })
}

/// Monte Carlo latency estimate; identical for any `workers >= 1`.
///
/// # Safety
/// `failure_probs` and `costs` must hold `n` elements; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_simulate_latency(
    failure_probs: *const f64,
    costs: *const u64,
    n: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    out: *mut HbLatencyEstimate,
) -> HbStatus {
    guard(|| {
        let chain = chain(failure_probs, costs, n)?;
        let est = simulate_latency_with_workers(&chain, trials, seed, workers.max(1))?;
        *out_ref(out, "out")? = HbLatencyEstimate {
            analytic: est.analytic,
            mc_mean: est.mc_mean,
            mc_stderr: est.mc_stderr,
            trials: est.trials,
            seed: est.seed,
        };
        Ok(())
    })
}

/// Parses and validates a scenario document (UTF-8 JSON).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_scenario_from_json(
    json: *const c_char,
    out: *mut *mut HbScenario,
) -> HbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(HbStatus::InvalidScenario, format!("not UTF-8: {e}")))?;
        let resolved = Scenario::from_json(text)?.resolve()?;
        *out = Box::into_raw(Box::new(HbScenario(resolved)));
        Ok(())
    })
}

/// Releases a scenario; null is ignored.
///
/// # Safety
/// `sc` must be null or come from `hb_scenario_from_json` and not have been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn hb_scenario_free(sc: *mut HbScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// # Safety
/// `sc` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_scenario_num_hops(sc: *const HbScenario, out: *mut usize) -> HbStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(sc, "scenario")?.0.channels.len();
        Ok(())
    })
}

/// Runs the scenario's allocation method. `blocks` must have room for
/// `capacity` entries; with fewer than the hop count the call fails with
/// `BufferTooSmall` and writes nothing. `end_to_end_rate` may be null.
///
/// # Safety
/// `sc` must be a live handle, `blocks` valid for `capacity` writes and
/// `end_to_end_rate` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hb_scenario_allocate(
    sc: *const HbScenario,
    blocks: *mut u64,
    capacity: usize,
    end_to_end_rate: *mut f64,
) -> HbStatus {
    guard(|| {
        let sc = in_ref(sc, "scenario")?;
        let n = sc.0.channels.len();
        if capacity < n {
            return Err(Failure(
                HbStatus::BufferTooSmall,
                format!("need room for {n} blocklengths, got {capacity}"),
            ));
        }
        let report = sc.0.allocate()?;
        out_slice(blocks, n, "blocks")?.copy_from_slice(&report.allocation.blocklengths);
        if let Some(r) = end_to_end_rate.as_mut() {
            *r = report.allocation.end_to_end_rate;
        }
        Ok(())
    })
}
