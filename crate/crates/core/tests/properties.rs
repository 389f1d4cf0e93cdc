use hopbound::allocation::{
    information_continuous_blocks, optimal_time_share, reliability_optimal_blocks,
    stationarity_residual, Allocation, Method,
};
use hopbound::arq::{backward_recursion, expected_latency, simulate_latency, ArqChain};
use hopbound::distproto;
use hopbound::exponents::{critical_rate, random_coding_exponent, sphere_packing_exponent};
use hopbound::system::system_error_bounds;
use hopbound::HopChannel;
use proptest::prelude::*;

fn snr() -> impl Strategy<Value = f64> {
    (-1.0f64..2.0).prop_map(|x| 10f64.powf(x))
}

fn stochastic_row(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn small_dmc() -> impl Strategy<Value = HopChannel> {
    (2usize..4, 2usize..4)
        .prop_flat_map(|(x, y)| (prop::collection::vec(stochastic_row(y), x), stochastic_row(x)))
        .prop_map(|(t, q)| HopChannel::dmc(t, q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e0_is_zero_at_origin_concave_and_increasing(snr in snr(), rho in 0.01f64..5.0) {
        let ch = HopChannel::awgn(snr).unwrap();
        prop_assert_eq!(ch.e0(0.0).unwrap(), 0.0);
        let h = 1e-3;
        let (a, b, c) = (ch.e0(rho - h / 2.0).unwrap(), ch.e0(rho).unwrap(), ch.e0(rho + h / 2.0).unwrap());
        prop_assert!(c >= b && b >= a);
        prop_assert!(a + c - 2.0 * b <= 1e-12);
    }

    #[test]
    fn e0_slope_at_origin_is_capacity(ch in small_dmc()) {
        let slope = ch.e0_derivative(0.0).unwrap();
        prop_assert!((slope - ch.capacity()).abs() <= 1e-9);
    }

    #[test]
    fn exponents_are_ordered_and_monotone(snr in snr(), f1 in 0.02f64..0.99, f2 in 0.02f64..0.99) {
        let ch = HopChannel::awgn(snr).unwrap();
        let c = ch.capacity();
        let (lo, hi) = if f1 < f2 { (f1 * c, f2 * c) } else { (f2 * c, f1 * c) };
        let rc_lo = random_coding_exponent(lo, &ch).unwrap().exponent;
        let rc_hi = random_coding_exponent(hi, &ch).unwrap().exponent;
        let sp_lo = sphere_packing_exponent(lo, &ch).unwrap().exponent;
        let sp_hi = sphere_packing_exponent(hi, &ch).unwrap().exponent;
        prop_assert!(rc_lo >= rc_hi && sp_lo >= sp_hi);
        prop_assert!(rc_lo <= sp_lo + 1e-12 && rc_hi <= sp_hi + 1e-12);
        prop_assert!(rc_hi >= 0.0);
    }

    #[test]
    fn exponents_coincide_above_critical_rate(snr in snr(), f in 0.0f64..0.999) {
        let ch = HopChannel::awgn(snr).unwrap();
        let r_cr = critical_rate(&ch).unwrap().r_cr;
        let rate = r_cr + f * (ch.capacity() - r_cr);
        let rc = random_coding_exponent(rate, &ch).unwrap().exponent;
        let sp = sphere_packing_exponent(rate, &ch).unwrap().exponent;
        prop_assert!((rc - sp).abs() <= 1e-9);
    }

    #[test]
    fn exponents_vanish_at_and_above_capacity(snr in snr(), over in 1.0f64..3.0) {
        let ch = HopChannel::awgn(snr).unwrap();
        let rate = over * ch.capacity();
        prop_assert_eq!(random_coding_exponent(rate, &ch).unwrap().exponent, 0.0);
        prop_assert_eq!(sphere_packing_exponent(rate, &ch).unwrap().exponent, 0.0);
    }

    #[test]
    fn reliability_split_is_balanced_and_sums(
        e in prop::collection::vec(0.01f64..2.0, 1..6),
        q in 200u64..5000,
    ) {
        let split = reliability_optimal_blocks(&e, q).unwrap();
        prop_assert_eq!(split.blocklengths.iter().sum::<u64>(), q);
        prop_assert!(split.blocklengths.iter().all(|&b| b >= 1));
        let real_sum: f64 = split.real_blocks.iter().sum();
        prop_assert!((real_sum - q as f64).abs() <= 1e-9 * q as f64);
        if split.real_blocks.iter().all(|&x| x > 0.0) {
            prop_assert!(stationarity_residual(&e, &split.real_blocks) <= 1e-8);
        }
    }

    #[test]
    fn info_continuous_split_sums_to_budget(
        rates in prop::collection::vec(0.1f64..3.0, 1..5),
        q in 100u64..5000,
    ) {
        let split = information_continuous_blocks(&rates, q).unwrap();
        prop_assert_eq!(split.blocklengths.iter().sum::<u64>(), q);
        for (&b, &f) in split.blocklengths.iter().zip(&split.floors) {
            prop_assert!(b as i64 >= f);
        }
    }

    #[test]
    fn time_share_is_a_distribution(caps in prop::collection::vec(0.05f64..5.0, 1..6)) {
        let share = optimal_time_share(&caps).unwrap();
        prop_assert!((share.lambdas.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (l, c) in share.lambdas.iter().zip(&caps) {
            prop_assert!((l * c - share.network_rate).abs() <= 1e-12 * share.network_rate.max(1.0));
        }
    }

    #[test]
    fn system_bounds_are_sandwiched(
        snrs in prop::collection::vec(snr(), 1..4),
        frac in 0.05f64..0.95,
        q in 50u64..2000,
    ) {
        let hops: Vec<HopChannel> = snrs.iter().map(|&s| HopChannel::awgn(s).unwrap()).collect();
        let rates: Vec<f64> = hops.iter().map(|h| frac * h.capacity()).collect();
        let n = hops.len() as u64;
        prop_assume!(q >= n);
        let base = q / n;
        let mut blocks = vec![base; hops.len()];
        blocks[0] += q - base * n;
        let alloc = Allocation::new(blocks.clone(), rates.clone(), Method::Manual).unwrap();
        let b = system_error_bounds(&alloc, &hops).unwrap();
        prop_assert!(b.pe_lower <= b.pe_upper * (1.0 + 1e-12));
        prop_assert!(b.esys_lower <= b.esys_upper + 1e-12);
        let min_term = blocks
            .iter()
            .zip(&b.per_hop_rc)
            .map(|(&qn, r)| qn as f64 / q as f64 * r.exponent)
            .fold(f64::INFINITY, f64::min);
        let slack = (hops.len() as f64).ln() / q as f64;
        prop_assert!(b.esys_lower <= min_term + 1e-12);
        prop_assert!(b.esys_lower >= min_term - slack - 1e-12);

        let better: Vec<HopChannel> = snrs.iter().map(|&s| HopChannel::awgn(2.0 * s).unwrap()).collect();
        let b2 = system_error_bounds(&alloc, &better).unwrap();
        prop_assert!(b2.esys_lower > b.esys_lower && b2.esys_upper > b.esys_upper);
    }

    #[test]
    fn latency_closed_form_matches_recursion(
        chain in prop::collection::vec((0.0f64..0.99, 1u64..1000), 1..=10),
    ) {
        let (p, q): (Vec<f64>, Vec<u64>) = chain.into_iter().unzip();
        let c = ArqChain::new(p, q).unwrap();
        let closed = expected_latency(&c);
        let rec = backward_recursion(&c)[0];
        prop_assert!((closed - rec).abs() <= 1e-12 * closed);
    }

    #[test]
    fn latency_is_monotone(
        chain in prop::collection::vec((0.0f64..0.9, 1u64..1000), 1..6),
        hop in 0usize..6,
        dp in 0.0f64..0.09,
        dq in 0u64..100,
    ) {
        let (p, q): (Vec<f64>, Vec<u64>) = chain.into_iter().unzip();
        let hop = hop % p.len();
        let base = expected_latency(&ArqChain::new(p.clone(), q.clone()).unwrap());
        let mut p2 = p.clone();
        p2[hop] += dp;
        let mut q2 = q.clone();
        q2[hop] += dq;
        prop_assert!(expected_latency(&ArqChain::new(p2, q.clone()).unwrap()) >= base);
        prop_assert!(expected_latency(&ArqChain::new(p, q2).unwrap()) >= base);
    }

    #[test]
    fn distributed_matches_centralized(
        snrs in prop::collection::vec(snr(), 1..5),
        frac in 0.05f64..0.95,
        q in 100u64..3000,
    ) {
        let hops: Vec<HopChannel> = snrs.iter().map(|&s| HopChannel::awgn(s).unwrap()).collect();
        let rates: Vec<f64> = hops.iter().map(|h| frac * h.capacity()).collect();
        let n = hops.len();
        match distproto::run(hops, &rates, q) {
            Ok(out) => {
                prop_assert!(out.matches_centralized);
                prop_assert_eq!(out.non_local_reads, 0);
                prop_assert_eq!(out.forward_messages, n - 1);
                prop_assert_eq!(out.broadcast_deliveries, n);
            }
            // tiny budgets can leave a hop without channel uses
            Err(e) => {
                let infeasible = matches!(e, hopbound::Error::Infeasible { .. });
                prop_assert!(infeasible, "unexpected error {}", e);
            }
        }
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let chain = ArqChain::new(vec![0.3, 0.1, 0.6], vec![40, 70, 20]).unwrap();
    let a = simulate_latency(&chain, 30_000, 77).unwrap();
    let b = simulate_latency(&chain, 30_000, 77).unwrap();
    assert_eq!(a, b);
    let c = simulate_latency(&chain, 30_000, 78).unwrap();
    assert_ne!(a.mc_mean, c.mc_mean);
}
