mod common;

use alp_core::optimizer::{
    audit_threshold, brute_force_optimal, detect_escape, margin_slope, optimal_output, shifting_gain,
};
use alp_core::profit::expected_net_profit;
use alp_core::{optimal_price, ArmsLengthPrice, Division, Param, Regime, Side, TaxScenario};
use common::{htp_fixture, ltp_fixture, random_interior};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scenarios(n: usize) -> Vec<TaxScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    (0..n).map(|_| random_interior(&mut rng)).collect()
}

#[test]
fn closed_form_matches_grid_search() {
    for (k, s) in scenarios(100).iter().enumerate() {
        let opt = optimal_price(s).unwrap();
        assert_eq!(opt.regime, Regime::Interior, "scenario {k}");
        let alp = s.alp();
        let (lo, hi) = (alp.p_edge().min(alp.p_mode()), alp.p_edge().max(alp.p_mode()));
        let (x, _) = brute_force_optimal(|p| expected_net_profit(s, p).unwrap(), lo, hi, 100_000).unwrap();
        let tol = (hi - lo) * 1e-6;
        let p = opt.p_star.unwrap();
        assert!((p - x).abs() <= tol, "scenario {k}: closed {p} grid {x}");
    }
}

#[test]
fn gain_is_profit_difference() {
    for (k, s) in scenarios(100).iter().enumerate() {
        let opt = optimal_price(s).unwrap();
        let gain = shifting_gain(s, &opt).unwrap();
        let diff = expected_net_profit(s, opt.p_star.unwrap()).unwrap()
            - expected_net_profit(s, s.alp().p_mode()).unwrap();
        assert!(gain > 0.0);
        assert!(((gain - diff) / gain).abs() <= 1e-9, "scenario {k}: {gain} vs {diff}");
    }
}

#[test]
fn direction_follows_tax_gap() {
    for s in scenarios(100) {
        let opt = optimal_price(&s).unwrap();
        let dp = opt.delta_p.unwrap();
        if s.tau2() < s.tau1() {
            assert!(dp < 0.0);
        } else {
            assert!(dp > 0.0);
        }
        assert!(opt.alpha.unwrap() > 0.0 && opt.alpha.unwrap() < 1.0);
    }
}

#[test]
fn fixtures_gain_positive() {
    for s in [ltp_fixture(), htp_fixture()] {
        let opt = optimal_price(&s).unwrap();
        assert!(opt.gain.unwrap() > 0.0);
    }
}

#[test]
fn threshold_is_sharp() {
    let s = ltp_fixture();
    let lmin = audit_threshold(&s).unwrap();
    assert!((lmin - 0.1001).abs() < 5e-5);
    let above = s.with_param(Param::Lambda, lmin + 1e-6).unwrap();
    let below = s.with_param(Param::Lambda, lmin - 1e-6).unwrap();
    assert_eq!(optimal_price(&above).unwrap().regime, Regime::Interior);
    assert_eq!(optimal_price(&below).unwrap().regime, Regime::Escaped);
    let at = s.with_param(Param::Lambda, lmin).unwrap();
    assert!(margin_slope(&at).unwrap().abs() < 1e-12);
    let ev = detect_escape(&below, 1000).unwrap();
    assert!(ev.constant_sign);
    assert!(detect_escape(&above, 1000).is_err());
}

#[test]
fn threshold_random_scenarios() {
    for s in scenarios(50) {
        let lmin = audit_threshold(&s).unwrap();
        let below = s.with_param(Param::Lambda, lmin * (1.0 - 1e-6)).unwrap();
        assert_eq!(optimal_price(&below).unwrap().regime, Regime::Escaped);
        assert!(detect_escape(&below, 1000).unwrap().constant_sign);
    }
}

fn htp_convex() -> TaxScenario {
    TaxScenario::new(
        0.20,
        0.35,
        0.5,
        1.0,
        10.0,
        Division::linear_quadratic(20.0, 1.0, 1.0, 10.0),
        Division::linear_quadratic(20.0, 1.0, 1.0, 20.0),
        ArmsLengthPrice::new(Side::Upper, 120.0, 100.0, 0.5).unwrap(),
    )
    .unwrap()
}

#[test]
fn output_matches_grid_search() {
    let s = htp_convex();
    let opt = optimal_price(&s).unwrap();
    let out = optimal_output(&s, &opt).unwrap();
    assert!(!out.binding);
    let p = opt.p_star.unwrap();
    let obj = |m: f64| expected_net_profit(&s.with_param(Param::M, m).unwrap(), p).unwrap();
    let (m, _) = brute_force_optimal(obj, 1e-6, s.div2.sales, 10_000).unwrap();
    assert!((m - out.m_star).abs() <= s.div2.sales * 1e-6, "{m} vs {}", out.m_star);
}

#[test]
fn output_bound_binds_with_flat_costs() {
    let s = htp_fixture();
    let opt = optimal_price(&s).unwrap();
    let out = optimal_output(&s, &opt).unwrap();
    assert!(out.binding);
    assert_eq!(out.m_star, s.div2.sales);
    assert!(out.multiplier >= 0.0);
}
