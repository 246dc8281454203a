//! Optimum as a function of a single enforcement level `gamma_dot` that
//! drives both the tolerance `g(gamma_dot)` and the audit probability
//! `f(gamma_dot)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{Optimum, Regime, ShiftInputs};
use crate::profit::TaxScenario;

/// Smallest enforcement level evaluated; stands in for `0+`.
pub const MIN_GAMMA_DOT: f64 = 1e-6;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Monotone map `(0, 1] -> (0, 1]` with its derivative.
#[derive(Clone)]
pub enum ProfileFn {
    Identity,
    /// `y^k`
    Power(f64),
    /// `3y^2 - 2y^3`
    Smoothstep,
    /// Logistic with slope `k` centred at 1/2, rescaled to hit 0 and 1.
    Logistic(f64),
    Custom { value: RealFn, derivative: RealFn },
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl ProfileFn {
    pub fn custom<V, D>(value: V, derivative: D) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ProfileFn::Custom { value: Arc::new(value), derivative: Arc::new(derivative) }
    }

    /// Registry lookup by name; `params` carries `k` for the parametric maps.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let k = |default: Option<f64>| -> Result<f64> {
            match (params.first(), default) {
                (Some(&k), _) if k > 0.0 && k.is_finite() => Ok(k),
                (Some(&k), _) => Err(Error::InvalidParameter { field: "k", reason: format!("{k} must be positive") }),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::InvalidParameter { field: "k", reason: format!("`{name}` needs a parameter") }),
            }
        };
        match name {
            "identity" => Ok(ProfileFn::Identity),
            "power" => Ok(ProfileFn::Power(k(None)?)),
            "smoothstep" => Ok(ProfileFn::Smoothstep),
            "logistic" => Ok(ProfileFn::Logistic(k(Some(10.0))?)),
            _ => Err(Error::InvalidParameter {
                field: "name",
                reason: format!("unknown profile `{name}` (expected identity, power, smoothstep or logistic)"),
            }),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match self {
            ProfileFn::Identity => y,
            ProfileFn::Power(k) => y.powf(*k),
            ProfileFn::Smoothstep => y * y * (3.0 - 2.0 * y),
            ProfileFn::Logistic(k) => {
                let lo = sigmoid(-0.5 * k);
                let hi = sigmoid(0.5 * k);
                (sigmoid(k * (y - 0.5)) - lo) / (hi - lo)
            }
            ProfileFn::Custom { value, .. } => value(y),
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        match self {
            ProfileFn::Identity => 1.0,
            ProfileFn::Power(k) => k * y.powf(k - 1.0),
            ProfileFn::Smoothstep => 6.0 * y * (1.0 - y),
            ProfileFn::Logistic(k) => {
                let s = sigmoid(k * (y - 0.5));
                k * s * (1.0 - s) / (sigmoid(0.5 * k) - sigmoid(-0.5 * k))
            }
            ProfileFn::Custom { derivative, .. } => derivative(y),
        }
    }
}

impl fmt::Debug for ProfileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileFn::Identity => write!(f, "Identity"),
            ProfileFn::Power(k) => write!(f, "Power({k})"),
            ProfileFn::Smoothstep => write!(f, "Smoothstep"),
            ProfileFn::Logistic(k) => write!(f, "Logistic({k})"),
            ProfileFn::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

/// Tolerance map `g` and audit-probability map `f`.
#[derive(Debug, Clone)]
pub struct EnforcementProfile {
    pub g: ProfileFn,
    pub f: ProfileFn,
}

impl EnforcementProfile {
    pub fn new(g: ProfileFn, f: ProfileFn) -> Self {
        Self { g, f }
    }
}

fn clip(gamma_dot: f64) -> Result<f64> {
    if gamma_dot > 0.0 && gamma_dot <= 1.0 {
        Ok(gamma_dot.max(MIN_GAMMA_DOT))
    } else {
        Err(Error::DomainError(format!("enforcement level {gamma_dot} is outside (0, 1]")))
    }
}

/// `n` uniform points on `[MIN_GAMMA_DOT, 1]`, endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n)
            .map(|k| if k == n - 1 { 1.0 } else { MIN_GAMMA_DOT + (1.0 - MIN_GAMMA_DOT) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Optimum with `gamma -> g(gamma_dot)` and `1 - e^{-lambda} -> f(gamma_dot)`.
pub fn p_star_enforcement(base: &TaxScenario, prof: &EnforcementProfile, gamma_dot: f64) -> Result<Optimum> {
    let y = clip(gamma_dot)?;
    let g = prof.g.value(y);
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::DomainError(format!("tolerance map gives {g} at {y}")));
    }
    Optimum::solve(base, g, prof.f.value(y))
}

/// `dp* [g' (ln share_base + 1/(1 + g)) - f' g / f]`, the bracket being
/// returned separately by [`enforcement_bracket`].
pub fn dp_ddotgamma(base: &TaxScenario, prof: &EnforcementProfile, gamma_dot: f64) -> Result<f64> {
    let inputs = ShiftInputs::from_scenario(base)?;
    let y = clip(gamma_dot)?;
    let (g, f) = (prof.g.value(y), prof.f.value(y));
    Ok(inputs.delta_p(g, f) * enforcement_bracket(&inputs, prof, y)?)
}

/// Logarithmic derivative of the price gap in `gamma_dot`.
pub fn enforcement_bracket(inputs: &ShiftInputs, prof: &EnforcementProfile, gamma_dot: f64) -> Result<f64> {
    let y = clip(gamma_dot)?;
    let (g, f) = (prof.g.value(y), prof.f.value(y));
    let (dg, df) = (prof.g.derivative(y), prof.f.derivative(y));
    let sb = inputs.share_base(g, f);
    Ok(dg * (sb.ln() + 1.0 / (1.0 + g)) - df * g / f)
}

fn runs(grid: &[f64], flags: &[bool]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (k, &bad) in flags.iter().enumerate() {
        match (bad, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((grid[s], grid[k - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((grid[s], grid[grid.len() - 1]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryReport {
    /// `f >= g / (1 + g)` at every grid point.
    pub satisfied: bool,
    /// Maximal runs of consecutive grid points where the inequality fails.
    pub violations: Vec<(f64, f64)>,
    /// Whether, with `tau_j = 0` and `z = 0`, the inequality agrees at every
    /// grid point with the cumulative intensity `-ln(1 - f)` reaching the
    /// audit threshold `ln(1 + g)`.
    pub equivalence_holds: bool,
}

/// Checks `f >= g / (1 + g)` on a grid of enforcement levels.
pub fn check_necessary(prof: &EnforcementProfile, grid: &[f64]) -> Result<NecessaryReport> {
    let mut flags = Vec::with_capacity(grid.len());
    let mut equivalence_holds = true;
    for &y in grid {
        let y = clip(y)?;
        let (g, f) = (prof.g.value(y), prof.f.value(y));
        let holds = f >= g / (1.0 + g);
        flags.push(!holds);
        equivalence_holds &= holds == intensity_reaches_threshold(g, f);
    }
    Ok(NecessaryReport {
        satisfied: flags.iter().all(|b| !b),
        violations: runs(grid, &flags),
        equivalence_holds,
    })
}

/// `-ln(1 - f) >= -ln(1 - |dtau| / ((1 + z) tau_i (1 + 1/g)))` with
/// `|dtau| = tau_i` and `z = 0`, i.e. against the threshold `ln(1 + g)`.
pub fn intensity_reaches_threshold(g: f64, f: f64) -> bool {
    let cumulative = -(-f).ln_1p();
    let ratio = 1.0 / (1.0 + 1.0 / g);
    let threshold = -(-ratio).ln_1p();
    cumulative >= threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientReport {
    /// `f >= g` at every grid point.
    pub satisfied: bool,
    pub violations: Vec<(f64, f64)>,
    /// Grid points where the scenario's optimum escapes.
    pub escapes: usize,
}

/// Checks `f >= g` on the grid and counts escaped optima for `base`.
pub fn check_sufficient(base: &TaxScenario, prof: &EnforcementProfile, grid: &[f64]) -> Result<SufficientReport> {
    let mut flags = Vec::with_capacity(grid.len());
    let mut escapes = 0;
    for &y in grid {
        let y = clip(y)?;
        flags.push(prof.f.value(y) < prof.g.value(y));
        if p_star_enforcement(base, prof, y)?.regime == Regime::Escaped {
            escapes += 1;
        }
    }
    Ok(SufficientReport { satisfied: flags.iter().all(|b| !b), violations: runs(grid, &flags), escapes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnforcementPoint {
    pub gamma_dot: f64,
    pub optimum: Optimum,
    pub derivative: f64,
}

/// Optimum and its enforcement derivative at every grid point.
pub fn regime_scan(base: &TaxScenario, prof: &EnforcementProfile, grid: &[f64]) -> Result<Vec<EnforcementPoint>> {
    grid.iter()
        .map(|&y| {
            Ok(EnforcementPoint {
                gamma_dot: y,
                optimum: p_star_enforcement(base, prof, y)?,
                derivative: dp_ddotgamma(base, prof, y)?,
            })
        })
        .collect()
}

/// `p_mode + |dtau| / (2 (1 + z) tau_i) (p_edge - p_mode)`, the optimum
/// under full enforcement when `g(1) = f(1) = 1`.
pub fn full_enforcement_price(base: &TaxScenario) -> Result<f64> {
    let i = ShiftInputs::from_scenario(base)?;
    Ok(i.p_mode + i.abs_dtau / (2.0 * (1.0 + i.penalty_rate) * i.tau_i) * i.width)
}
