//! Closed-form optimal transfer price, the audit threshold that keeps it on
//! the interest interval, escape detection, the second-stage output choice
//! and a brute-force maximizer used as an oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::ArmsLengthPrice;
use crate::profit::{
    crisp_expected_net_profit, harmed_country, HarmedCountry, ShiftDiagnosis, TaxScenario,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The optimum lies on the interest interval and is an alpha-cut bound.
    Interior,
    /// The objective is unbounded in the shifting direction.
    Escaped,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::Escaped => "escaped",
        }
    }
}

/// Raw inputs of the closed form, free of scenario validation so that
/// limiting cases (`z = 0`, `tau_j = 0`) and perturbed parameters can be
/// evaluated directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftInputs {
    /// `sgn(tau2 - tau1)`
    pub sign: f64,
    pub tau_i: f64,
    pub abs_dtau: f64,
    pub penalty_rate: f64,
    pub p_mode: f64,
    /// `p_edge - p_mode`
    pub width: f64,
}

impl ShiftInputs {
    pub fn from_scenario(s: &TaxScenario) -> Result<Self> {
        let h: HarmedCountry = harmed_country(s)?;
        Ok(Self {
            sign: h.sign,
            tau_i: h.tau_i,
            abs_dtau: h.abs_dtau,
            penalty_rate: s.penalty_rate(),
            p_mode: s.alp().p_mode(),
            width: s.alp().price_difference(),
        })
    }

    /// `|dtau| / (P (1 + z) tau_i (1 + 1/gamma))`; the optimum is interior
    /// iff this is at most 1.
    pub fn share_base(&self, gamma: f64, audit_prob: f64) -> f64 {
        self.abs_dtau / (audit_prob * (1.0 + self.penalty_rate) * self.tau_i * (1.0 + 1.0 / gamma))
    }

    /// `share_base^gamma (p_edge - p_mode)`, also evaluated past the edge.
    pub fn delta_p(&self, gamma: f64, audit_prob: f64) -> f64 {
        self.share_base(gamma, audit_prob).powf(gamma) * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub diagnosis: ShiftDiagnosis,
    pub regime: Regime,
    /// Tolerance exponent the optimum was computed with.
    pub gamma: f64,
    pub share_base: f64,
    /// `share_base^gamma`, the fraction of the way from mode to edge.
    pub share: f64,
    /// Closed-form gap even when it falls outside the support.
    pub formal_delta_p: f64,
    pub p_star: Option<f64>,
    pub delta_p: Option<f64>,
    /// Membership grade of `p_star`.
    pub alpha: Option<f64>,
    pub gain: Option<f64>,
    /// Slope of the crisp objective past the edge, reported when escaped.
    pub crisp_slope: Option<f64>,
}

impl Optimum {
    /// Optimum of a scenario with tolerance `gamma` and audit probability
    /// `audit_prob` substituted into the closed form.
    pub(crate) fn solve(s: &TaxScenario, gamma: f64, audit_prob: f64) -> Result<Self> {
        let inputs = ShiftInputs::from_scenario(s)?;
        let diagnosis = harmed_country(s)?.diagnosis;
        let share_base = inputs.share_base(gamma, audit_prob);
        let share = share_base.powf(gamma);
        let formal_delta_p = share * inputs.width;
        let m = s.quantity();
        if share_base > 1.0 || share_base.is_nan() {
            let crisp_slope = inputs.sign * m * (inputs.abs_dtau - audit_prob * (1.0 + inputs.penalty_rate) * inputs.tau_i);
            return Ok(Self {
                diagnosis,
                regime: Regime::Escaped,
                gamma,
                share_base,
                share,
                formal_delta_p,
                p_star: None,
                delta_p: None,
                alpha: None,
                gain: None,
                crisp_slope: Some(crisp_slope),
            });
        }
        let p_star = inputs.p_mode + formal_delta_p;
        let shape = ArmsLengthPrice::new(s.alp().side(), s.alp().p_edge(), s.alp().p_mode(), gamma.min(1.0))?;
        Ok(Self {
            diagnosis,
            regime: Regime::Interior,
            gamma,
            share_base,
            share,
            formal_delta_p,
            p_star: Some(p_star),
            delta_p: Some(formal_delta_p),
            alpha: Some(shape.membership(p_star)),
            gain: Some(inputs.sign * inputs.abs_dtau * formal_delta_p * m / (1.0 + gamma)),
            crisp_slope: None,
        })
    }

    /// Price at the mode with no shifting, used when taxes are equal.
    pub fn at_mode(s: &TaxScenario) -> Self {
        Self {
            diagnosis: crate::profit::classify(s),
            regime: Regime::Interior,
            gamma: s.alp().gamma(),
            share_base: 0.0,
            share: 0.0,
            formal_delta_p: 0.0,
            p_star: Some(s.alp().p_mode()),
            delta_p: Some(0.0),
            alpha: Some(1.0),
            gain: Some(0.0),
            crisp_slope: None,
        }
    }
}

/// Expected-profit maximizing transfer price.
pub fn optimal_price(s: &TaxScenario) -> Result<Optimum> {
    Optimum::solve(s, s.alp().gamma(), s.audit_prob())
}

/// Audit intensity at which the optimum reaches the support edge:
/// `-ln(1 - |dtau| / ((1 + z) tau_i (1 + 1/gamma)))`.
pub fn lambda_threshold(abs_dtau: f64, tau_i: f64, penalty_rate: f64, gamma: f64) -> Result<f64> {
    let ratio = abs_dtau / ((1.0 + penalty_rate) * tau_i * (1.0 + 1.0 / gamma));
    if !(ratio < 1.0) {
        return Err(Error::InfeasiblePenalty(ratio));
    }
    Ok(-(-ratio).ln_1p())
}

/// Smallest audit intensity keeping the optimum interior.
pub fn audit_threshold(s: &TaxScenario) -> Result<f64> {
    let h = harmed_country(s)?;
    lambda_threshold(h.abs_dtau, h.tau_i, s.penalty_rate(), s.alp().gamma())
}

/// `dE[Pi]/dp` at the support edge, approached from the interest interval.
/// Zero exactly when `lambda` equals the audit threshold.
pub fn margin_slope(s: &TaxScenario) -> Result<f64> {
    let h = harmed_country(s)?;
    let g = s.alp().gamma();
    Ok(h.sign * s.quantity() * (h.abs_dtau - s.audit_prob() * (1.0 + s.penalty_rate()) * h.tau_i * (1.0 + 1.0 / g)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeEvidence {
    /// `(tau2 - tau1) m - P (1 + z) sgn(tau2 - tau1) tau_i m`
    pub slope: f64,
    pub threshold: f64,
    /// Smallest objective increase between consecutive probes moving away
    /// from the mode; positive when the objective is monotone.
    pub min_step_gain: f64,
    pub constant_sign: bool,
}

/// Confirms that below the audit threshold the crisp objective increases
/// without bound in the shifting direction past the support edge.
pub fn detect_escape(s: &TaxScenario, probes: usize) -> Result<EscapeEvidence> {
    let h = harmed_country(s)?;
    let threshold = match audit_threshold(s) {
        Ok(t) => t,
        Err(Error::InfeasiblePenalty(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let lambda = s.audit_lambda();
    if !(lambda < threshold) {
        return Err(Error::NotInEscapeRegime { lambda, threshold });
    }
    if probes < 2 {
        return Err(Error::InvalidArgs("need at least 2 probes".into()));
    }
    let alp = s.alp();
    let outward = alp.price_difference().signum();
    let mut span = alp.price_difference().abs();
    if outward < 0.0 {
        span = span.min(0.99 * alp.p_edge());
    }
    let m = s.quantity();
    let slope = h.sign * m * (h.abs_dtau - s.audit_prob() * (1.0 + s.penalty_rate()) * h.tau_i);
    let mut prev = crisp_expected_net_profit(s, alp.p_edge())?;
    let mut min_step_gain = f64::INFINITY;
    for k in 1..=probes {
        let p = alp.p_edge() + outward * span * k as f64 / probes as f64;
        let v = crisp_expected_net_profit(s, p)?;
        min_step_gain = min_step_gain.min(v - prev);
        prev = v;
    }
    Ok(EscapeEvidence {
        slope,
        threshold,
        min_step_gain,
        constant_sign: min_step_gain > 0.0 && slope * outward > 0.0,
    })
}

/// `(tau2 - tau1) dp* m / (1 + gamma)`
pub fn shifting_gain(s: &TaxScenario, opt: &Optimum) -> Result<f64> {
    let _ = harmed_country(s)?;
    opt.gain
        .ok_or_else(|| Error::DomainError("escaped regime has no finite gain".into()))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Grid argmax over `n` uniform points on `[lo, hi]`, refined by golden
/// section on the bracket around the winner to `(hi - lo) 1e-9`.
pub fn brute_force_optimal<F>(objective: F, lo: f64, hi: f64, n: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if n < 1000 {
        return Err(Error::InvalidArgs(format!("grid needs at least 1000 points, got {n}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgs(format!("empty interval [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let at = |k: usize| if k == n - 1 { hi } else { lo + step * k as f64 };
    let (mut best_k, mut best) = (0, objective(lo));
    for k in 1..n {
        let v = objective(at(k));
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let a = at(best_k.saturating_sub(1));
    let b = at((best_k + 1).min(n - 1));
    let (x, v) = golden_max(&objective, a, b, (hi - lo) * 1e-9);
    if v >= best {
        Ok((x, v))
    } else {
        Ok((at(best_k), best))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputOptimum {
    pub m_star: f64,
    /// Multiplier of `m <= s2`; zero unless the bound binds.
    pub multiplier: f64,
    pub foc_residual: f64,
    pub binding: bool,
}

fn check_convex(c: &dyn crate::profit::Cost, division: u8, lo: f64, hi: f64) -> Result<()> {
    for k in 0..=100 {
        let x = lo + (hi - lo) * k as f64 / 100.0;
        if c.curvature(x) < -1e-12 {
            return Err(Error::NonConvexCost { division, at: x });
        }
    }
    Ok(())
}

/// Marginal expected profit in the intra-firm quantity at the optimal
/// price gap of `opt`.
pub fn output_foc(s: &TaxScenario, opt: &Optimum, m: f64) -> Result<f64> {
    let dp = opt
        .delta_p
        .ok_or_else(|| Error::DomainError("escaped regime has no finite price gap".into()))?;
    let (t1, t2) = (s.tau1(), s.tau2());
    let transfer = (t2 - t1) * (s.alp().p_mode() + dp / (1.0 + opt.gamma));
    Ok(-(1.0 - t1) * s.div1.cost.marginal(s.div1.sales + m) + (1.0 - t2) * s.div2.cost.marginal(s.div2.sales - m)
        + transfer)
}

/// Second-stage quantity on `(0, s2]` by bisection on the first-order
/// condition, or the bound `s2` with its multiplier.
pub fn optimal_output(s: &TaxScenario, opt: &Optimum) -> Result<OutputOptimum> {
    let s1 = s.div1.sales;
    let s2 = s.div2.sales;
    check_convex(s.div1.cost.as_ref(), 1, s1, s1 + s2)?;
    check_convex(s.div2.cost.as_ref(), 2, 0.0, s2)?;
    let foc = |m: f64| output_foc(s, opt, m);
    let at_bound = foc(s2)?;
    if at_bound >= 0.0 {
        return Ok(OutputOptimum { m_star: s2, multiplier: at_bound, foc_residual: 0.0, binding: true });
    }
    if foc(0.0)? <= 0.0 {
        return Err(Error::NoRoot { upper: s2 });
    }
    let (mut lo, mut hi) = (0.0, s2);
    let mut mid = 0.5 * (lo + hi);
    let mut value = foc(mid)?;
    for _ in 0..200 {
        if value.abs() <= 1e-12 || hi - lo <= 1e-14 * s2.max(1.0) {
            break;
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        value = foc(mid)?;
    }
    Ok(OutputOptimum { m_star: mid, multiplier: 0.0, foc_residual: value, binding: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::Side;
    use crate::profit::{expected_net_profit, Division, Param};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn ltp() -> TaxScenario {
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

    fn htp() -> TaxScenario {
        ltp()
            .with_param(Param::Tau1, 0.20)
            .unwrap()
            .with_param(Param::Tau2, 0.35)
            .unwrap()
            .with_alp(ArmsLengthPrice::new(Side::Upper, 120.0, 100.0, 0.5).unwrap())
    }

    #[test]
    fn fixture_optimum() {
        let o = optimal_price(&ltp()).unwrap();
        assert_eq!(o.regime, Regime::Interior);
        assert_abs_diff_eq!(o.share_base, 0.1506644482732692, epsilon = 1e-12);
        assert_abs_diff_eq!(o.share, 0.38815518581267106, epsilon = 1e-12);
        assert_abs_diff_eq!(o.p_star.unwrap(), 92.23689628374657, epsilon = 1e-10);
        assert_abs_diff_eq!(o.alpha.unwrap(), 0.7822050972649877, epsilon = 1e-10);
        assert_abs_diff_eq!(o.gain.unwrap(), 7.763103716253421, epsilon = 1e-10);
    }

    #[test]
    fn fixture_matches_grid() {
        let s = ltp();
        let (p, _) = brute_force_optimal(|p| expected_net_profit(&s, p).unwrap(), 80.0, 100.0, 1_000_000).unwrap();
        assert_abs_diff_eq!(p, optimal_price(&s).unwrap().p_star.unwrap(), epsilon = 2e-5);
    }

    #[test]
    fn equal_taxes_rejected() {
        let s = ltp().with_param(Param::Tau2, 0.35).unwrap();
        assert!(matches!(optimal_price(&s), Err(Error::NoIncentive(_))));
    }

    #[test]
    fn heavy_penalty_shrinks_gap() {
        let mut last = f64::NEG_INFINITY;
        for z in [1.0, 10.0, 1e3, 1e6] {
            let dp = optimal_price(&ltp().with_param(Param::Z, z).unwrap()).unwrap().delta_p.unwrap();
            assert!(dp < 0.0 && dp > last);
            last = dp;
        }
        assert!(last > -0.1);
    }

    #[test]
    fn threshold_value_and_flip() {
        let s = ltp();
        let t = audit_threshold(&s).unwrap();
        assert_abs_diff_eq!(t, 0.10008345855698253, epsilon = 1e-12);
        let below = optimal_price(&s.with_param(Param::Lambda, t - 1e-7).unwrap()).unwrap();
        let above = optimal_price(&s.with_param(Param::Lambda, t + 1e-7).unwrap()).unwrap();
        assert_eq!(below.regime, Regime::Escaped);
        assert_eq!(above.regime, Regime::Interior);
        assert_abs_diff_eq!(margin_slope(&s.with_param(Param::Lambda, t).unwrap()).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn threshold_limits() {
        assert!(lambda_threshold(1e-9, 0.35, 0.5, 0.5).unwrap() < 1e-8);
        // unreachable from a valid scenario since |dtau| <= tau_i and z > 0
        assert!(matches!(lambda_threshold(0.9, 0.35, 0.0, 1.0), Err(Error::InfeasiblePenalty(_))));
    }

    #[test]
    fn escape_evidence() {
        let s = ltp().with_param(Param::Lambda, 0.05).unwrap();
        let o = optimal_price(&s).unwrap();
        assert_eq!(o.regime, Regime::Escaped);
        assert!(o.p_star.is_none() && o.gain.is_none());
        let e = detect_escape(&s, 1000).unwrap();
        assert!(e.constant_sign);
        assert!(e.slope < 0.0);
        assert_eq!(o.crisp_slope, Some(e.slope));
        assert!(matches!(detect_escape(&ltp(), 1000), Err(Error::NotInEscapeRegime { .. })));
        let at = ltp().with_param(Param::Lambda, audit_threshold(&ltp()).unwrap()).unwrap();
        assert!(matches!(detect_escape(&at, 1000), Err(Error::NotInEscapeRegime { .. })));
    }

    #[test]
    fn gain_is_objective_difference() {
        for s in [ltp(), htp()] {
            let o = optimal_price(&s).unwrap();
            let diff = expected_net_profit(&s, o.p_star.unwrap()).unwrap() - expected_net_profit(&s, 100.0).unwrap();
            assert_relative_eq!(shifting_gain(&s, &o).unwrap(), diff, max_relative = 1e-9);
        }
    }

    #[test]
    fn mirror_has_same_gain() {
        let a = optimal_price(&ltp()).unwrap();
        let b = optimal_price(&htp()).unwrap();
        assert_relative_eq!(a.gain.unwrap(), b.gain.unwrap(), max_relative = 1e-14);
        assert_relative_eq!(a.delta_p.unwrap(), -b.delta_p.unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn brute_force_sanity() {
        let (x, v) = brute_force_optimal(|x| -(x - 0.3141).powi(2), 0.0, 1.0, 1000).unwrap();
        assert_abs_diff_eq!(x, 0.3141, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        let (x, _) = brute_force_optimal(|x| x, 0.0, 1.0, 1000).unwrap();
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-9);
        let (x, _) = brute_force_optimal(|x| -x, 0.0, 1.0, 1000).unwrap();
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-9);
        assert!(brute_force_optimal(|x| x, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn output_no_root_on_ltp_fixture() {
        let s = ltp();
        let o = optimal_price(&s).unwrap();
        assert!(matches!(optimal_output(&s, &o), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn output_binds_when_shifting_dominates() {
        let s = htp();
        let o = optimal_price(&s).unwrap();
        let r = optimal_output(&s, &o).unwrap();
        assert!(r.binding);
        assert_eq!(r.m_star, 20.0);
        assert!(r.multiplier > 0.0);
    }

    #[test]
    fn output_equal_taxes_equalizes_marginal_cost() {
        let s = ltp().with_param(Param::Tau1, 0.2).unwrap();
        let r = optimal_output(&s, &Optimum::at_mode(&s)).unwrap();
        // 1 + 0.2 (10 + m) = 1 + 0.2 (20 - m)
        assert_abs_diff_eq!(r.m_star, 5.0, epsilon = 1e-10);
        assert!(!r.binding);
    }

    #[test]
    fn output_rejects_concave_cost() {
        let mut s = ltp();
        s.div2 = Division::linear_quadratic(20.0, 1.0, -0.1, 20.0);
        let o = optimal_price(&s).unwrap();
        assert!(matches!(optimal_output(&s, &o), Err(Error::NonConvexCost { division: 2, .. })));
    }
}
