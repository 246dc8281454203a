//! Poisson audit counts over a limitation period and the non-homogeneous
//! intensity used to parametrize audit probability by enforcement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower integration limit standing in for the open endpoint at 0.
pub const INTENSITY_LOWER_LIMIT: f64 = 1e-12;
/// Absolute tolerance of the adaptive quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

const MAX_DEPTH: u32 = 60;
// Uniform subdivision levels before the error test is trusted; a single
// coarse Simpson pair can agree by accident on smooth rational integrands.
const MIN_DEPTH: u32 = 4;
const LOG_SPACE_FROM: u64 = 20;

/// Expected number of audits over the limitation period.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AuditIntensity(f64);

impl AuditIntensity {
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self(lambda))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob_at_least_one(self) -> f64 {
        -(-self.0).exp_m1()
    }
}

impl TryFrom<f64> for AuditIntensity {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AuditIntensity> for f64 {
    fn from(v: AuditIntensity) -> f64 {
        v.0
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `lambda^k e^{-lambda} / k!`
pub fn poisson_pmf(k: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if k > LOG_SPACE_FROM {
        return Ok((k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp());
    }
    let factorial: f64 = (2..=k).map(|i| i as f64).product();
    Ok(lambda.powi(k as i32) * (-lambda).exp() / factorial)
}

/// Probability of at most `k` audits.
pub fn poisson_cdf(k: u64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut total = 0.0;
    for q in 0..=k {
        total += poisson_pmf(q, lambda)?;
    }
    Ok(total.min(1.0))
}

/// `Gamma(a, lambda) / Gamma(a)` for integer `a`, from the finite series
/// `e^{-lambda} sum_{q < a} lambda^q / q!`.
pub fn regularized_upper_gamma(a: u64, lambda: f64) -> Result<f64> {
    if a == 0 {
        return Err(Error::InvalidArgs("shape must be a positive integer".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgs(format!("lambda must be positive and finite, got {lambda}")));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for q in 1..a {
        term *= lambda / q as f64;
        sum += term;
    }
    Ok((sum * (-lambda).exp()).min(1.0))
}

/// `1 - e^{-lambda}`
pub fn prob_at_least_one(lambda: f64) -> Result<f64> {
    Ok(AuditIntensity::new(lambda)?.prob_at_least_one())
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

struct Quad<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    exhausted: bool,
}

impl<F: Fn(f64) -> f64> Quad<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, fa: f64, m: f64, fm: f64, b: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        let forced = MAX_DEPTH - depth < MIN_DEPTH;
        if (!forced && delta.abs() <= 15.0 * tol) || !delta.is_finite() {
            return left + right + delta / 15.0;
        }
        if depth == 0 || m <= a || b <= m {
            self.exhausted = true;
            return left + right + delta / 15.0;
        }
        self.step(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
            + self.step(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson on `[a, b]` with Richardson correction.
fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    let mut q = Quad { f, exhausted: false };
    let value = q.step(a, fa, m, fm, b, fb, whole, tol, MAX_DEPTH);
    if q.exhausted || !value.is_finite() {
        return Err(Error::DivergentIntegral { upper: b, estimate: value });
    }
    Ok(value)
}

fn check_gamma_dot(gamma_dot: f64) -> Result<()> {
    if gamma_dot > 0.0 && gamma_dot <= 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("enforcement level {gamma_dot} is outside (0, 1]")))
    }
}

/// Cumulative audit intensity `int_0^{gamma_dot} rate(y) dy`.
pub fn cumulative_intensity<F>(rate: F, gamma_dot: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_gamma_dot(gamma_dot)?;
    if gamma_dot <= INTENSITY_LOWER_LIMIT {
        return Ok(0.0);
    }
    integrate(&rate, INTENSITY_LOWER_LIMIT, gamma_dot, QUADRATURE_TOLERANCE)
}

/// Rate `f'(y) / (1 - f(y))`, whose cumulative intensity is `-ln(1 - f)`.
pub fn semi_elasticity_rate<F, D>(f: F, df: D) -> impl Fn(f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    move |y| df(y) / (1.0 - f(y))
}

/// Audit probability at enforcement level `gamma_dot`, i.e. `f(gamma_dot)`.
pub fn prob_audit_enforcement<F>(f: F, gamma_dot: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_gamma_dot(gamma_dot)?;
    Ok(f(gamma_dot))
}
