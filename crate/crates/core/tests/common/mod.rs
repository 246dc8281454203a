#![allow(dead_code)]

use alp_core::optimizer::lambda_threshold;
use alp_core::{ArmsLengthPrice, Division, Side, TaxScenario};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ltp_fixture() -> TaxScenario {
    TaxScenario::new(
        0.35,
        0.20,
        0.5,
        1.0,
        10.0,
        Division::linear_quadratic(20.0, 1.0, 0.1, 10.0),
        Division::linear_quadratic(20.0, 1.0, 0.1, 20.0),
        ArmsLengthPrice::new(Side::Lower, 80.0, 100.0, 0.5).unwrap(),
    )
    .unwrap()
}

pub fn htp_fixture() -> TaxScenario {
    TaxScenario::new(
        0.20,
        0.35,
        0.5,
        1.0,
        10.0,
        Division::linear_quadratic(20.0, 1.0, 0.1, 10.0),
        Division::linear_quadratic(20.0, 1.0, 0.1, 20.0),
        ArmsLengthPrice::new(Side::Upper, 120.0, 100.0, 0.5).unwrap(),
    )
    .unwrap()
}

/// Random scenario with the audit intensity at least 1% above its threshold.
pub fn random_interior(rng: &mut ChaCha8Rng) -> TaxScenario {
    loop {
        let t1: f64 = rng.gen_range(0.05..0.5);
        let t2: f64 = rng.gen_range(0.05..0.5);
        if (t1 - t2).abs() < 0.01 {
            continue;
        }
        let z = rng.gen_range(0.01..2.0);
        let gamma = rng.gen_range(0.1..=1.0);
        let (tau_i, side) = if t2 < t1 { (t1, Side::Lower) } else { (t2, Side::Upper) };
        let Ok(lmin) = lambda_threshold((t2 - t1).abs(), tau_i, z, gamma) else { continue };
        let lambda = lmin * 1.01 + rng.gen_range(0.0..3.0);
        let p_mode = rng.gen_range(50.0..150.0);
        let width = rng.gen_range(5.0..40.0);
        let p_edge = match side {
            Side::Lower => p_mode - width,
            Side::Upper => p_mode + width,
        };
        let m = rng.gen_range(1.0..20.0);
        let s1 = rng.gen_range(5.0..30.0);
        let s2 = m + rng.gen_range(0.0..20.0);
        return TaxScenario::new(
            t1,
            t2,
            z,
            lambda,
            m,
            Division::linear_quadratic(20.0, 1.0, 0.1, s1),
            Division::linear_quadratic(25.0, 2.0, 0.05, s2),
            ArmsLengthPrice::new(side, p_edge, p_mode, gamma).unwrap(),
        )
        .unwrap();
    }
}
