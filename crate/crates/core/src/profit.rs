//! Divisional and global profits of a two-country firm, the fuzzy tax
//! penalty and the expected net profit objective.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit::AuditIntensity;
use crate::error::{Error, Result};
use crate::fuzzy::{ArmsLengthPrice, Side};

pub trait Revenue: fmt::Debug + Send + Sync {
    fn value(&self, sales: f64) -> f64;
}

pub trait Cost: fmt::Debug + Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn marginal(&self, x: f64) -> f64;

    /// Second derivative; central difference of `marginal` unless overridden.
    fn curvature(&self, x: f64) -> f64 {
        let h = 1e-5 * x.abs().max(1.0);
        (self.marginal(x + h) - self.marginal(x - h)) / (2.0 * h)
    }
}

/// `R(s) = a s`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRevenue {
    pub a: f64,
}

impl Revenue for LinearRevenue {
    fn value(&self, sales: f64) -> f64 {
        self.a * sales
    }
}

/// `C(x) = b x + c x^2`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCost {
    pub b: f64,
    pub c: f64,
}

impl Cost for QuadraticCost {
    fn value(&self, x: f64) -> f64 {
        self.b * x + self.c * x * x
    }

    fn marginal(&self, x: f64) -> f64 {
        self.b + 2.0 * self.c * x
    }

    fn curvature(&self, _x: f64) -> f64 {
        2.0 * self.c
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cost given as a value closure and its derivative.
#[derive(Clone)]
pub struct ClosureCost {
    value: RealFn,
    marginal: RealFn,
}

impl ClosureCost {
    pub fn new<V, M>(value: V, marginal: M) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        M: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { value: Arc::new(value), marginal: Arc::new(marginal) }
    }
}

impl fmt::Debug for ClosureCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ClosureCost(..)")
    }
}

impl Cost for ClosureCost {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn marginal(&self, x: f64) -> f64 {
        (self.marginal)(x)
    }
}

#[derive(Debug, Clone)]
pub struct Division {
    pub revenue: Arc<dyn Revenue>,
    pub cost: Arc<dyn Cost>,
    pub sales: f64,
}

impl Division {
    pub fn new(revenue: impl Revenue + 'static, cost: impl Cost + 'static, sales: f64) -> Self {
        Self { revenue: Arc::new(revenue), cost: Arc::new(cost), sales }
    }

    pub fn linear_quadratic(a: f64, b: f64, c: f64, sales: f64) -> Self {
        Self::new(LinearRevenue { a }, QuadraticCost { b, c }, sales)
    }
}

/// Scalar inputs that a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Tau1,
    Tau2,
    Z,
    Lambda,
    Gamma,
    M,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::Tau1, Param::Tau2, Param::Z, Param::Lambda, Param::Gamma, Param::M];

    pub fn name(self) -> &'static str {
        match self {
            Param::Tau1 => "tau1",
            Param::Tau2 => "tau2",
            Param::Z => "z",
            Param::Lambda => "lambda",
            Param::Gamma => "gamma",
            Param::M => "m",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Tax rates, penalty and audit intensity of the harmed country, the
/// intra-firm quantity and both divisions.
///
/// `penalty_rate` and `audit_lambda` belong to whichever country loses
/// tax base, as decided by [`classify`].
#[derive(Debug, Clone)]
pub struct TaxScenario {
    tau1: f64,
    tau2: f64,
    penalty_rate: f64,
    audit_lambda: AuditIntensity,
    quantity: f64,
    pub div1: Division,
    pub div2: Division,
    alp: ArmsLengthPrice,
}

fn check_rate(field: &'static str, tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("{tau} is outside [0, 1]") })
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("{v} must be positive and finite") })
    }
}

impl TaxScenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tau1: f64,
        tau2: f64,
        penalty_rate: f64,
        audit_lambda: f64,
        quantity: f64,
        div1: Division,
        div2: Division,
        alp: ArmsLengthPrice,
    ) -> Result<Self> {
        check_rate("tau1", tau1)?;
        check_rate("tau2", tau2)?;
        check_positive("penalty_rate", penalty_rate)?;
        let audit_lambda = AuditIntensity::new(audit_lambda)?;
        check_positive("quantity", quantity)?;
        for (field, v) in [("div1.sales", div1.sales), ("div2.sales", div2.sales)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { field, reason: format!("{v} must be non-negative") });
            }
        }
        Ok(Self { tau1, tau2, penalty_rate, audit_lambda, quantity, div1, div2, alp })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn penalty_rate(&self) -> f64 {
        self.penalty_rate
    }

    pub fn audit_lambda(&self) -> f64 {
        self.audit_lambda.value()
    }

    /// `1 - e^{-lambda}`
    pub fn audit_prob(&self) -> f64 {
        self.audit_lambda.prob_at_least_one()
    }

    pub fn quantity(&self) -> f64 {
        self.quantity
    }

    pub fn alp(&self) -> &ArmsLengthPrice {
        &self.alp
    }

    pub fn param(&self, p: Param) -> f64 {
        match p {
            Param::Tau1 => self.tau1,
            Param::Tau2 => self.tau2,
            Param::Z => self.penalty_rate,
            Param::Lambda => self.audit_lambda(),
            Param::Gamma => self.alp.gamma(),
            Param::M => self.quantity,
        }
    }

    /// Copy with one parameter replaced, revalidated.
    pub fn with_param(&self, p: Param, v: f64) -> Result<Self> {
        let mut next = self.clone();
        match p {
            Param::Tau1 => {
                check_rate("tau1", v)?;
                next.tau1 = v;
            }
            Param::Tau2 => {
                check_rate("tau2", v)?;
                next.tau2 = v;
            }
            Param::Z => {
                check_positive("penalty_rate", v)?;
                next.penalty_rate = v;
            }
            Param::Lambda => next.audit_lambda = AuditIntensity::new(v)?,
            Param::Gamma => next.alp = self.alp.with_gamma(v)?,
            Param::M => {
                check_positive("quantity", v)?;
                next.quantity = v;
            }
        }
        Ok(next)
    }

    pub fn with_alp(&self, alp: ArmsLengthPrice) -> Self {
        Self { alp, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDiagnosis {
    /// `tau2 < tau1`: profit leaves country 1 through a low price.
    Ltp,
    /// `tau2 > tau1`: profit leaves country 2 through a high price.
    Htp,
    NoIncentive,
}

impl ShiftDiagnosis {
    pub fn harmed_country(self) -> Option<u8> {
        match self {
            ShiftDiagnosis::Ltp => Some(1),
            ShiftDiagnosis::Htp => Some(2),
            ShiftDiagnosis::NoIncentive => None,
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            ShiftDiagnosis::Ltp => Some(Side::Lower),
            ShiftDiagnosis::Htp => Some(Side::Upper),
            ShiftDiagnosis::NoIncentive => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShiftDiagnosis::Ltp => "ltp",
            ShiftDiagnosis::Htp => "htp",
            ShiftDiagnosis::NoIncentive => "no_incentive",
        }
    }
}

pub fn classify(s: &TaxScenario) -> ShiftDiagnosis {
    if s.tau2 < s.tau1 {
        ShiftDiagnosis::Ltp
    } else if s.tau2 > s.tau1 {
        ShiftDiagnosis::Htp
    } else {
        ShiftDiagnosis::NoIncentive
    }
}

/// Harmed-country view of a scenario with a shifting incentive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmedCountry {
    pub diagnosis: ShiftDiagnosis,
    /// `sgn(tau2 - tau1)`
    pub sign: f64,
    pub tau_i: f64,
    pub tau_j: f64,
    pub abs_dtau: f64,
}

/// Classification with the checks every optimizer entry point needs:
/// a nonzero incentive and an arm's length price on the matching side.
pub fn harmed_country(s: &TaxScenario) -> Result<HarmedCountry> {
    let diagnosis = classify(s);
    let (sign, tau_i, tau_j) = match diagnosis {
        ShiftDiagnosis::NoIncentive => return Err(Error::NoIncentive(s.tau1)),
        ShiftDiagnosis::Ltp => (-1.0, s.tau1, s.tau2),
        ShiftDiagnosis::Htp => (1.0, s.tau2, s.tau1),
    };
    let expected = diagnosis.side().expect("incentive present");
    if s.alp.side() != expected {
        return Err(Error::SideMismatch { case: diagnosis.name(), expected: expected.name() });
    }
    Ok(HarmedCountry { diagnosis, sign, tau_i, tau_j, abs_dtau: (s.tau2 - s.tau1).abs() })
}

/// `(pi_1, pi_2)` before tax at transfer price `p`.
pub fn pretax_profits(s: &TaxScenario, p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter { field: "p", reason: format!("price {p} must be positive") });
    }
    let m = s.quantity;
    if s.div2.sales - m < 0.0 {
        return Err(Error::NegativeQuantity { quantity: m, sales: s.div2.sales });
    }
    let (d1, d2) = (&s.div1, &s.div2);
    let pi1 = d1.revenue.value(d1.sales) - d1.cost.value(d1.sales + m) + p * m;
    let pi2 = d2.revenue.value(d2.sales) - d2.cost.value(d2.sales - m) - p * m;
    Ok((pi1, pi2))
}

/// `(1 - tau1) pi_1 + (1 - tau2) pi_2`
pub fn global_net_profit(s: &TaxScenario, p: f64) -> Result<f64> {
    let (pi1, pi2) = pretax_profits(s, p)?;
    Ok((1.0 - s.tau1) * pi1 + (1.0 - s.tau2) * pi2)
}

fn penalty_with_weight(s: &TaxScenario, h: &HarmedCountry, p: f64, weight: f64) -> f64 {
    let gap = p - s.alp.p_mode();
    s.audit_prob() * (1.0 + s.penalty_rate) * h.sign * h.tau_i * gap * weight * s.quantity
}

/// Expected fuzzy tax penalty at price `p` on the interest interval.
///
/// The weight `((p - p_mode)/(p_edge - p_mode))^{1/gamma}` grows from 0 at
/// the mode to 1 at the support edge. Prices on the mode side carry no
/// penalty.
pub fn expected_penalty(s: &TaxScenario, p: f64) -> Result<f64> {
    let h = harmed_country(s)?;
    let alp = &s.alp;
    let t = (p - alp.p_mode()) / alp.price_difference();
    if t <= 0.0 {
        return Ok(0.0);
    }
    if t > 1.0 {
        return Err(Error::OutsideSupport { price: p, edge: alp.p_edge() });
    }
    Ok(penalty_with_weight(s, &h, p, t.powf(1.0 / alp.gamma())))
}

/// Global net profit minus the expected penalty.
pub fn expected_net_profit(s: &TaxScenario, p: f64) -> Result<f64> {
    Ok(global_net_profit(s, p)? - expected_penalty(s, p)?)
}

/// Expected net profit extended past the support edge, where the price is
/// certainly outside the arm's length range and the penalty weight is 1.
pub fn crisp_expected_net_profit(s: &TaxScenario, p: f64) -> Result<f64> {
    let h = harmed_country(s)?;
    let t = (p - s.alp.p_mode()) / s.alp.price_difference();
    if t <= 1.0 {
        return expected_net_profit(s, p);
    }
    Ok(global_net_profit(s, p)? - penalty_with_weight(s, &h, p, 1.0))
}
