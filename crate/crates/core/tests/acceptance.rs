//! Acceptance criteria 1 to 11. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line; the process exits nonzero if
//! any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use hopbound::allocation::{
    information_continuous_blocks, optimal_time_share, reliability_optimal_blocks,
};
use hopbound::arq::{backward_recursion, expected_latency, latency_bounds, simulate_latency, ArqChain};
use hopbound::distproto;
use hopbound::exponents::{critical_rate, random_coding_exponent, sphere_packing_exponent};
use hopbound::figures::{self, fig3_curve, fig3_point, scheme_allocation, Scheme};
use hopbound::oracle::{
    bsc_ensemble_error, exhaustive_allocation, refined_grid_max_exponent, GridSpec,
};
use hopbound::HopChannel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPONENT_TOL: f64 = 1e-9;
const R_CR_TOL: f64 = 1e-10;
const GRID_TOL: f64 = 1e-8;
const STATIONARITY_TOL: f64 = 1e-8;
const RECURSION_REL_TOL: f64 = 1e-12;
const MC_SIGMAS: f64 = 4.0;
const FIG3_INFOCONT_REL_TOL: f64 = 0.10;
const FIG3_HIGH_RATE_FRACTION: f64 = 0.7;
const FIG4_AGREEMENT_REL_TOL: f64 = 0.02;
const FIG4_SMALL_PE: f64 = 0.01;
const ENSEMBLE_SIGMAS: f64 = 3.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    match budget {
        Some(b) if elapsed > b => outcome(
            false,
            format!("{}; runtime {elapsed:.2?} exceeds {b:?}", o.detail),
        ),
        _ => o,
    }
}

fn critical_rate_closed_form() -> Outcome {
    let ch = HopChannel::awgn(1.0).unwrap();
    let r_cr = critical_rate(&ch).unwrap().r_cr;
    let expected = 1.5f64.ln() - 1.0 / 6.0;
    let d_cr = (r_cr - expected).abs();
    let cap = ch.capacity();
    let steps = 2000;
    let mut worst = 0.0f64;
    for k in 0..steps {
        let rate = r_cr + (cap - r_cr) * k as f64 / steps as f64;
        let rc = random_coding_exponent(rate, &ch).unwrap().exponent;
        let sp = sphere_packing_exponent(rate, &ch).unwrap().exponent;
        worst = worst.max((rc - sp).abs());
    }
    outcome(
        d_cr <= R_CR_TOL && worst <= EXPONENT_TOL,
        format!("|R_cr - (ln 1.5 - 1/6)| = {d_cr:.2e}; max |E_r - E_sp| on [R_cr, C) = {worst:.2e} over {steps} rates"),
    )
}

fn grid_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_rc, mut worst_sp) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let snr = 10f64.powf(rng.random_range(-1.0..=2.0));
        let ch = HopChannel::awgn(snr).unwrap();
        let c = ch.capacity();
        let rate = rng.random_range(0.05 * c..=0.999 * c);
        let rc = random_coding_exponent(rate, &ch).unwrap().exponent;
        let sp = sphere_packing_exponent(rate, &ch).unwrap().exponent;
        let g_rc = refined_grid_max_exponent(rate, &ch, &GridSpec::new(0.0, 1.0, 1e-4).unwrap(), 1e-9)
            .unwrap()
            .0;
        let g_sp = refined_grid_max_exponent(rate, &ch, &GridSpec::new(0.0, 1000.0, 1e-2).unwrap(), 1e-9)
            .unwrap()
            .0;
        worst_rc = worst_rc.max((rc - g_rc).abs());
        worst_sp = worst_sp.max((sp - g_sp).abs());
    }
    outcome(
        worst_rc <= GRID_TOL && worst_sp <= GRID_TOL,
        format!("50 instances, max |dE_r| = {worst_rc:.2e}, max |dE_sp| = {worst_sp:.2e}"),
    )
}

fn allocation_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = Vec::new();
    for k in 0..20 {
        let n = rng.random_range(1..=3usize);
        let q = rng.random_range(n as u64..=60);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        let ours = reliability_optimal_blocks(&e, q).unwrap().blocklengths;
        let (best, _) = exhaustive_allocation(&e, q).unwrap();
        if ours != best {
            mismatches.push(format!("#{k} Q={q} E={e:?}: {ours:?} vs {best:?}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "20/20 instances equal the enumerated optimum".to_string()
        } else {
            mismatches.join("; ")
        },
    )
}

fn stationarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=8usize);
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        let split = reliability_optimal_blocks(&e, 1000).unwrap();
        let vals: Vec<f64> = e
            .iter()
            .zip(&split.real_blocks)
            .map(|(&en, &qn)| qn * en - en.ln())
            .collect();
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(spread);
    }
    outcome(
        worst <= STATIONARITY_TOL,
        format!("200 instances at Q=1000, max spread of Q_n E_n - ln E_n = {worst:.2e}"),
    )
}

fn time_share_equivalence() -> Outcome {
    let caps: Vec<f64> = [9.0, 6.0]
        .iter()
        .map(|&db| HopChannel::awgn_db(db).unwrap().capacity())
        .collect();
    let share = optimal_time_share(&caps).unwrap();
    let split = information_continuous_blocks(&caps, 1000).unwrap();
    let worst = split
        .blocklengths
        .iter()
        .zip(&share.lambdas)
        .map(|(&q, &l)| (q as f64 / 1000.0 - l).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1.0 / 1000.0,
        format!(
            "Q_n = {:?}, lambda* = [{:.4}, {:.4}], max |Q_n/Q - lambda_n| = {worst:.2e}",
            split.blocklengths, share.lambdas[0], share.lambdas[1]
        ),
    )
}

fn arq_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_rel = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10usize);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.99)).collect();
        let q: Vec<u64> = (0..n).map(|_| rng.random_range(1..=1000)).collect();
        let chain = ArqChain::new(p, q).unwrap();
        let closed = expected_latency(&chain);
        let rec = backward_recursion(&chain)[0];
        worst_rel = worst_rel.max((closed - rec).abs() / closed);
    }
    let mut worst_sigma = 0.0f64;
    for k in 0..20u64 {
        let n = rng.random_range(1..=5usize);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.9)).collect();
        let q: Vec<u64> = (0..n).map(|_| rng.random_range(1..=500)).collect();
        let chain = ArqChain::new(p, q).unwrap();
        let est = simulate_latency(&chain, 100_000, 1000 + k).unwrap();
        worst_sigma = worst_sigma.max((est.mc_mean - est.analytic).abs() / est.mc_stderr);
    }
    outcome(
        worst_rel <= RECURSION_REL_TOL && worst_sigma <= MC_SIGMAS,
        format!(
            "closed form vs recursion max rel diff {worst_rel:.2e} (1000 chains); MC worst |mean - analytic| = {worst_sigma:.2} stderr (20 chains, 1e5 trials)"
        ),
    )
}

fn fig3_reproduction() -> Outcome {
    let single_ch = Scheme::SingleHop.channels();
    let two_ch = Scheme::TwoHopRelopt.channels();
    let single_cap = Scheme::SingleHop.capacity();
    let net_cap = Scheme::TwoHopRelopt.capacity();
    let curves = [
        fig3_curve(Scheme::SingleHop),
        fig3_curve(Scheme::TwoHopRelopt),
        fig3_curve(Scheme::TwoHopInfoCont),
    ];
    let mut rates: Vec<f64> = curves
        .iter()
        .flat_map(|c| c.rows.iter().map(|r| r.end_to_end_rate))
        .filter(|&r| r < single_cap)
        .collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();

    let mut dominance_failures = Vec::new();
    for &rate in &rates {
        let single = fig3_point(Scheme::SingleHop, &single_ch, rate).unwrap();
        for scheme in [Scheme::TwoHopRelopt, Scheme::TwoHopInfoCont] {
            let two = fig3_point(scheme, &two_ch, rate).unwrap();
            if !(two.esys_rc > single.esys_rc && two.esys_sp > single.esys_sp) {
                dominance_failures.push(format!("{} at {rate:.4}", scheme.label()));
            }
        }
    }

    let relopt = &curves[1].rows;
    let infocont = &curves[2].rows;
    let mut checked = 0;
    let mut closeness_failures = Vec::new();
    for (a, b) in relopt.iter().zip(infocont) {
        assert_eq!(a.end_to_end_rate, b.end_to_end_rate);
        if a.end_to_end_rate < FIG3_HIGH_RATE_FRACTION * net_cap {
            continue;
        }
        checked += 1;
        let rel_rc = (b.esys_rc - a.esys_rc).abs() / a.esys_rc.abs();
        let rel_sp = (b.esys_sp - a.esys_sp).abs() / a.esys_sp.abs();
        if rel_rc > FIG3_INFOCONT_REL_TOL || rel_sp > FIG3_INFOCONT_REL_TOL {
            closeness_failures.push(format!(
                "R={:.4}: relopt {:.3e} vs infocont {:.3e} ({:.1}%)",
                a.end_to_end_rate,
                a.esys_rc,
                b.esys_rc,
                100.0 * rel_rc.max(rel_sp)
            ));
        }
    }
    let skipped: usize = curves.iter().map(|c| c.skipped.len()).sum();
    let mut detail = format!(
        "two-hop > single-hop at {}/{} rates below single-hop capacity; info-continuous within 10% of reliability-optimal at {}/{checked} rates >= 0.7 C_net; {skipped} sweep points skipped",
        rates.len() * 2 - dominance_failures.len(),
        rates.len() * 2,
        checked - closeness_failures.len(),
    );
    for f in dominance_failures.iter().chain(&closeness_failures) {
        detail.push_str("; ");
        detail.push_str(f);
    }
    outcome(
        dominance_failures.is_empty() && closeness_failures.is_empty() && skipped == 0,
        detail,
    )
}

fn fig4_reproduction() -> Outcome {
    let mut agreement_checked = 0;
    let mut agreement_failures = Vec::new();
    for scheme in [Scheme::SingleHop, Scheme::TwoHopRelopt] {
        let curve = figures::fig4_curve(scheme, figures::FIG4_TRIALS, figures::FIG4_SEED, 1).unwrap();
        for row in &curve.rows {
            if row.max_hop_pe < FIG4_SMALL_PE {
                agreement_checked += 1;
                let rel = (row.latency_upper - row.latency_lower).abs() / row.latency_lower;
                if rel > FIG4_AGREEMENT_REL_TOL {
                    agreement_failures.push(format!("{} R={:.4} rel {rel:.3}", scheme.label(), row.end_to_end_rate));
                }
            }
        }
    }

    let single_ch = Scheme::SingleHop.channels();
    let two_ch = Scheme::TwoHopRelopt.channels();
    let mut compared = 0;
    let mut order_failures = Vec::new();
    for rate in figures::sweep_targets(Scheme::SingleHop.capacity()) {
        let single = scheme_allocation(Scheme::SingleHop, &single_ch, rate)
            .and_then(|a| latency_bounds(&a, &single_ch));
        let two = scheme_allocation(Scheme::TwoHopRelopt, &two_ch, rate)
            .and_then(|a| latency_bounds(&a, &two_ch));
        if let (Ok(s), Ok(t)) = (single, two) {
            compared += 1;
            if !(t.upper <= s.upper && t.lower <= s.lower) {
                order_failures.push(format!(
                    "R={rate:.4}: two-hop [{:.1}, {:.1}] vs single-hop [{:.1}, {:.1}]",
                    t.lower, t.upper, s.lower, s.upper
                ));
            }
        }
    }
    let mut detail = format!(
        "upper/lower within 2% at {}/{agreement_checked} points with all P_e < 0.01; two-hop <= single-hop at {}/{compared} matched rates",
        agreement_checked - agreement_failures.len(),
        compared - order_failures.len()
    );
    for f in agreement_failures.iter().chain(&order_failures) {
        detail.push_str("; ");
        detail.push_str(f);
    }
    outcome(
        agreement_checked > 0 && compared > 0 && agreement_failures.is_empty() && order_failures.is_empty(),
        detail,
    )
}

fn ensemble_bound() -> Outcome {
    let (n, m, p) = (8usize, 4usize, 0.05);
    let rate = (m as f64).ln() / n as f64;
    let er = random_coding_exponent(rate, &HopChannel::bsc(p).unwrap()).unwrap().exponent;
    let bound = (-(n as f64) * er).exp();
    let mut worst_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for seed in 1..=10u64 {
        let est = bsc_ensemble_error(n, m, p, 2000, seed).unwrap();
        let margin = bound + ENSEMBLE_SIGMAS * est.stderr - est.mean;
        worst_margin = worst_margin.min(margin);
        if margin < 0.0 {
            failures.push(format!("seed {seed}: mean {:.5}", est.mean));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "bound exp(-8 E_r(ln4/8)) = {bound:.5}; smallest margin over seeds 1-10 = {worst_margin:.5}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn random_hop(rng: &mut ChaCha8Rng) -> HopChannel {
    if rng.random_bool(0.7) {
        HopChannel::awgn(10f64.powf(rng.random_range(-1.0..=2.0))).unwrap()
    } else {
        let inputs = rng.random_range(2..=3usize);
        let outputs = rng.random_range(2..=4usize);
        let rows: Vec<Vec<f64>> = (0..inputs)
            .map(|i| {
                let mut row: Vec<f64> = (0..outputs).map(|_| rng.random_range(0.01..0.2)).collect();
                row[i % outputs] += 1.0;
                let s: f64 = row.iter().sum();
                row.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let input = vec![1.0 / inputs as f64; inputs];
        HopChannel::dmc(rows, input).unwrap()
    }
}

fn distributed_equals_centralized() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    let mut non_local = 0;
    let mut errors = Vec::new();
    for k in 0..100 {
        let n = rng.random_range(1..=6usize);
        let hops: Vec<HopChannel> = (0..n).map(|_| random_hop(&mut rng)).collect();
        let rates: Vec<f64> = hops
            .iter()
            .map(|h| rng.random_range(0.1..0.9) * h.capacity())
            .collect();
        let q = rng.random_range(200 * n as u64..=5000);
        match distproto::run(hops, &rates, q) {
            Ok(out) => {
                mismatches += usize::from(!out.matches_centralized);
                non_local += out.non_local_reads;
            }
            Err(e) => errors.push(format!("#{k}: {e}")),
        }
    }
    outcome(
        mismatches == 0 && non_local == 0 && errors.is_empty(),
        format!(
            "100 scenarios: {mismatches} mismatches, {non_local} non-local channel reads, {} errors{}",
            errors.len(),
            if errors.is_empty() { String::new() } else { format!(" ({})", errors.join("; ")) }
        ),
    )
}

fn fig4_determinism() -> Outcome {
    let dirs = [tempfile::TempDir::new().unwrap(), tempfile::TempDir::new().unwrap()];
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_hopbound"))
            .args(["reproduce", "--figure", "fig4", "--out-dir"])
            .arg(d.path())
            .env_remove("HOPBOUND_THREADS")
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("reproduce exited with {status}"));
        }
    }
    let mut names: Vec<String> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("fig4_") && n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(dirs[0].path().join(n)).ok() != std::fs::read(dirs[1].path().join(n)).ok())
        .collect();
    outcome(
        names.len() >= 2 && differing.is_empty(),
        format!("{} CSV files compared, {} differ: {names:?}", names.len(), differing.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "critical rate and E_r = E_sp above it", critical_rate_closed_form, Some(Duration::from_secs(1))),
        (2, "grid-oracle equivalence", grid_oracle_equivalence, Some(Duration::from_secs(30))),
        (3, "allocation optimality vs enumeration", allocation_optimality, Some(Duration::from_secs(60))),
        (4, "stationarity / error balancing", stationarity, None),
        (5, "time-share equivalence", time_share_equivalence, None),
        (6, "ARQ closed form, recursion and Monte Carlo", arq_correctness, Some(Duration::from_secs(30))),
        (7, "rate-reliability sweep properties", fig3_reproduction, Some(Duration::from_secs(60))),
        (8, "rate-latency sweep properties", fig4_reproduction, Some(Duration::from_secs(60))),
        (9, "random-coding ensemble bound", ensemble_bound, Some(Duration::from_secs(120))),
        (10, "distributed equals centralized", distributed_equals_centralized, None),
        (11, "fig4 reproduction is byte-identical", fig4_determinism, None),
    ];
    let mut failed = Vec::new();
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = within_budget(result, elapsed, budget);
        let tag = if result.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}) [{elapsed:.2?}]: {}", result.detail);
        if !result.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: {} of 11 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
