//! Comparative statics of the optimal transfer price.
//!
//! All derivatives are of the closed-form gap, so they are defined in the
//! escaped regime too, where they describe the formal solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::ShiftInputs;
use crate::profit::TaxScenario;

struct Point {
    inputs: ShiftInputs,
    tau_j: f64,
    gamma: f64,
    lambda: f64,
}

impl Point {
    fn of(s: &TaxScenario) -> Result<Self> {
        let inputs = match ShiftInputs::from_scenario(s) {
            Err(Error::NoIncentive(_)) => return Err(Error::Singular("tau1 == tau2")),
            other => other?,
        };
        if inputs.tau_i == 0.0 {
            return Err(Error::Singular("harmed country tax rate is 0"));
        }
        let tau_j = inputs.tau_i - inputs.abs_dtau;
        Ok(Self { inputs, tau_j, gamma: s.alp().gamma(), lambda: s.audit_lambda() })
    }

    fn audit_prob(&self) -> f64 {
        -(-self.lambda).exp_m1()
    }

    fn share_base(&self) -> f64 {
        self.inputs.share_base(self.gamma, self.audit_prob())
    }

    fn delta_p(&self) -> f64 {
        self.inputs.delta_p(self.gamma, self.audit_prob())
    }

    /// `gamma (p_edge - p_mode) / (P (1 + z) (1 + 1/gamma))^gamma`
    fn xi(&self) -> f64 {
        let g = self.gamma;
        let base = self.audit_prob() * (1.0 + self.inputs.penalty_rate) * (1.0 + 1.0 / g);
        g * self.inputs.width / base.powf(g)
    }

    fn dp_dtau(&self) -> f64 {
        let (t, a, g) = (self.inputs.tau_i, self.inputs.abs_dtau, self.gamma);
        self.xi() * (t - a) / (t.powf(1.0 + g) * a.powf(1.0 - g))
    }

    fn semi2(&self) -> f64 {
        let (t, a, g) = (self.inputs.tau_i, self.inputs.abs_dtau, self.gamma);
        ((g - 1.0) * t - (g + 1.0) * a) / (t * a)
    }
}

/// `dp*/dtau_i` for the harmed country `i`.
pub fn dp_dtau(s: &TaxScenario) -> Result<f64> {
    Ok(Point::of(s)?.dp_dtau())
}

/// `dp*/dtau_j` for the other country, using `d|dtau|/dtau_j = -1`.
pub fn dp_dtau_other(s: &TaxScenario) -> Result<f64> {
    let pt = Point::of(s)?;
    Ok(-pt.gamma * pt.delta_p() / pt.inputs.abs_dtau)
}

pub fn d2p_dtau2(s: &TaxScenario) -> Result<f64> {
    let pt = Point::of(s)?;
    Ok(pt.dp_dtau() * pt.semi2())
}

pub fn dp_dlambda(s: &TaxScenario) -> Result<f64> {
    let pt = Point::of(s)?;
    // e^{-l} / (1 - e^{-l}) = 1 / (e^l - 1)
    Ok(pt.delta_p() * -pt.gamma / pt.lambda.exp_m1())
}

pub fn dp_dz(s: &TaxScenario) -> Result<f64> {
    let pt = Point::of(s)?;
    Ok(pt.delta_p() * -pt.gamma / (1.0 + pt.inputs.penalty_rate))
}

pub fn dp_dgamma(s: &TaxScenario) -> Result<f64> {
    let pt = Point::of(s)?;
    Ok(pt.delta_p() * (pt.share_base().ln() + 1.0 / (1.0 + pt.gamma)))
}

/// Elasticity of the price gap in `tau_i`: `gamma (tau_i - |dtau|) / |dtau|`.
pub fn elasticity(s: &TaxScenario) -> Result<f64> {
    let pt = Point::of(s)?;
    Ok(pt.gamma * (pt.inputs.tau_i - pt.inputs.abs_dtau) / pt.inputs.abs_dtau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub delta_p: f64,
    pub dp_dtau: f64,
    pub dp_dtau_other: f64,
    pub d2p_dtau2: f64,
    pub dp_dlambda: f64,
    pub dp_dz: f64,
    pub dp_dgamma: f64,
    pub elasticity_tau: f64,
    /// Second-order semi-elasticity, `d2p_dtau2 / dp_dtau`.
    pub semi2: f64,
}

pub fn report(s: &TaxScenario) -> Result<SensitivityReport> {
    let pt = Point::of(s)?;
    let dp = pt.delta_p();
    Ok(SensitivityReport {
        delta_p: dp,
        dp_dtau: pt.dp_dtau(),
        dp_dtau_other: dp_dtau_other(s)?,
        d2p_dtau2: pt.dp_dtau() * pt.semi2(),
        dp_dlambda: dp_dlambda(s)?,
        dp_dz: dp_dz(s)?,
        dp_dgamma: dp_dgamma(s)?,
        elasticity_tau: elasticity(s)?,
        semi2: pt.semi2(),
    })
}

/// Central-difference estimates of the report's derivatives, taken on the
/// closed-form gap with steps `1e-6 max(1, |theta|)` (first order) and
/// `1e-4 max(1, |theta|)` (second order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifferences {
    pub dp_dtau: f64,
    pub dp_dtau_other: f64,
    pub d2p_dtau2: f64,
    pub dp_dlambda: f64,
    pub dp_dz: f64,
    pub dp_dgamma: f64,
}

pub fn finite_differences(s: &TaxScenario) -> Result<FiniteDifferences> {
    let pt = Point::of(s)?;
    let base = [pt.inputs.tau_i, pt.tau_j, pt.inputs.penalty_rate, pt.lambda, pt.gamma];
    let gap = |v: [f64; 5]| {
        let [ti, tj, z, lam, g] = v;
        let inputs = ShiftInputs { tau_i: ti, abs_dtau: ti - tj, penalty_rate: z, ..pt.inputs };
        inputs.delta_p(g, -(-lam).exp_m1())
    };
    let bumped = |k: usize, h: f64| {
        let mut v = base;
        v[k] += h;
        gap(v)
    };
    let first = |k: usize| {
        let h = 1e-6 * base[k].abs().max(1.0);
        (bumped(k, h) - bumped(k, -h)) / (2.0 * h)
    };
    let h2 = 1e-4 * base[0].abs().max(1.0);
    Ok(FiniteDifferences {
        dp_dtau: first(0),
        dp_dtau_other: first(1),
        d2p_dtau2: (bumped(0, h2) - 2.0 * gap(base) + bumped(0, -h2)) / (h2 * h2),
        dp_dlambda: first(3),
        dp_dz: first(2),
        dp_dgamma: first(4),
    })
}

/// Tolerance at which the price gap has unit elasticity in `tau_i`:
/// `|dtau| / (tau_i - |dtau|)`.
pub fn unit_elasticity_gamma(tau_i: f64, abs_dtau: f64) -> Result<f64> {
    let g = abs_dtau / (tau_i - abs_dtau);
    if g > 0.0 && g <= 1.0 {
        Ok(g)
    } else {
        Err(Error::OutOfRange(g))
    }
}

/// `W(tau_i |dtau| L) / L` with `L = ln|dtau| - ln tau_i`, the root of
/// `gamma (|dtau|/tau_i)^gamma = tau_i |dtau|`.
pub fn linearity_gamma(tau_i: f64, abs_dtau: f64) -> Result<f64> {
    if !(tau_i > 0.0 && abs_dtau > 0.0) {
        return Err(Error::DomainError(format!("need positive rates, got {tau_i} and {abs_dtau}")));
    }
    let l = abs_dtau.ln() - tau_i.ln();
    if l == 0.0 {
        return Err(Error::DomainError("tau_i equals |dtau|".into()));
    }
    Ok(lambert_w0(tau_i * abs_dtau * l)? / l)
}

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Principal branch of the Lambert W function by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E - 1e-15 {
        return Err(Error::DomainError(format!("{x} is below -1/e")));
    }
    if x == 0.0 || x.is_infinite() {
        return Ok(x);
    }
    let near_branch = x + INV_E;
    if near_branch <= 1e-16 {
        return Ok(-1.0);
    }
    let mut w = if x < -0.25 {
        // series at the branch point in p = sqrt(2 (e x + 1))
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln() * (1.0 - 0.2 * (1.0 + x).ln())
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Limit {
    Finite { value: f64 },
    Divergent { sign: f64 },
}

impl Limit {
    fn classify(value: f64) -> Self {
        if value.is_finite() {
            Limit::Finite { value }
        } else {
            Limit::Divergent { sign: value.signum() }
        }
    }
}

/// Limits of `dp*/dtau_i` at the edges of the tax-rate domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauLimits {
    pub tau_i_to_one: Limit,
    pub tau_j_to_one: Limit,
    /// `tau_i -> tau_j`; finite only for `gamma = 1`.
    pub tau_i_to_tau_j: Limit,
    /// `tau_i -> tau_j -> 1` with `gamma -> 1`.
    pub all_to_one: Limit,
    pub tau_i_to_zero: Limit,
    pub gamma_to_zero: Limit,
}

pub fn tau_limits(s: &TaxScenario) -> Result<TauLimits> {
    let pt = Point::of(s)?;
    let (g, tj) = (pt.gamma, pt.tau_j);
    let ti = pt.inputs.tau_i;
    let xi = pt.xi();
    let sign = pt.inputs.sign;
    let denom = pt.audit_prob() * (1.0 + pt.inputs.penalty_rate);
    let width = pt.inputs.width;
    let tau_i_to_tau_j = if g == 1.0 {
        Limit::Finite { value: width / (2.0 * ti * denom) }
    } else {
        Limit::Divergent { sign }
    };
    let tau_i_to_zero = if tj > 0.0 { Limit::Divergent { sign: -sign } } else { Limit::Finite { value: 0.0 } };
    Ok(TauLimits {
        tau_i_to_one: Limit::classify(xi * tj / (1.0 - tj).abs().powf(1.0 - g)),
        tau_j_to_one: Limit::classify(xi * (2.0 * ti - 1.0) / (ti.powf(1.0 + g) * (ti - 1.0).abs().powf(1.0 - g))),
        tau_i_to_tau_j,
        all_to_one: Limit::Finite { value: width / (2.0 * denom) },
        tau_i_to_zero,
        gamma_to_zero: Limit::Finite { value: 0.0 },
    })
}
