//! Scenario file schema, version 1.

use std::fmt;
use std::path::Path;

use alp_core::{ArmsLengthPrice, Division, EnforcementProfile, ProfileFn, TaxScenario};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "f64")]
struct Rate(f64);

impl TryFrom<f64> for Rate {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if (0.0..=1.0).contains(&v) {
            Ok(Rate(v))
        } else {
            Err(format!("tax rate {v} is outside [0, 1]"))
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "f64")]
struct Positive(f64);

impl TryFrom<f64> for Positive {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if v > 0.0 && v.is_finite() {
            Ok(Positive(v))
        } else {
            Err(format!("{v} must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "f64")]
struct NonNegative(f64);

impl TryFrom<f64> for NonNegative {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if v >= 0.0 && v.is_finite() {
            Ok(NonNegative(v))
        } else {
            Err(format!("{v} must be non-negative"))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "String")]
struct SchemaVersion;

impl TryFrom<String> for SchemaVersion {
    type Error = String;

    fn try_from(v: String) -> Result<Self, String> {
        if v == "1" {
            Ok(SchemaVersion)
        } else {
            Err(format!("unsupported schema version \"{v}\" (expected \"1\")"))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DivisionSpec {
    revenue_slope: Positive,
    cost_linear: NonNegative,
    cost_quadratic: NonNegative,
    sales: NonNegative,
}

impl DivisionSpec {
    fn build(&self) -> Division {
        Division::linear_quadratic(self.revenue_slope.0, self.cost_linear.0, self.cost_quadratic.0, self.sales.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            write!(f, "{}", self.name)
        } else {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "{}({})", self.name, ps.join(", "))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub g: MapSpec,
    pub f: MapSpec,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        let identity = || MapSpec { name: "identity".into(), params: vec![] };
        Self { g: identity(), f: identity() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[allow(dead_code)]
    schema_version: SchemaVersion,
    tau1: Rate,
    tau2: Rate,
    penalty_rate: Positive,
    audit_lambda: Positive,
    quantity: Positive,
    arms_length: ArmsLengthPrice,
    division1: DivisionSpec,
    division2: DivisionSpec,
    enforcement_profile: Option<ProfileSpec>,
    sweep: Option<SweepSpec>,
}

#[derive(Debug)]
pub struct ScenarioFile {
    pub scenario: TaxScenario,
    pub profile_spec: ProfileSpec,
    pub profile: EnforcementProfile,
    pub sweep: Option<SweepSpec>,
}

fn invalid(path: &Path, msg: impl fmt::Display) -> Failure {
    Failure::validation(format!("{}: {msg}", path.display()))
}

/// Parses and validates a scenario file. Errors carry the field path and,
/// for per-field failures, the line and column.
pub fn load(path: &Path) -> Result<ScenarioFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(path, e))?;
    parse(&text).map_err(|msg| invalid(path, msg))
}

pub fn parse(text: &str) -> Result<ScenarioFile, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            inner.to_string()
        } else {
            format!("{path}: {inner}")
        }
    })?;
    let div2 = raw.division2.build();
    if raw.quantity.0 > div2.sales {
        return Err(format!(
            "quantity: {} exceeds division2.sales {}",
            raw.quantity.0, div2.sales
        ));
    }
    let scenario = TaxScenario::new(
        raw.tau1.0,
        raw.tau2.0,
        raw.penalty_rate.0,
        raw.audit_lambda.0,
        raw.quantity.0,
        raw.division1.build(),
        div2,
        raw.arms_length,
    )
    .map_err(|e| e.to_string())?;
    let profile_spec = raw.enforcement_profile.unwrap_or_default();
    let map = |which: &str, m: &MapSpec| {
        ProfileFn::from_name(&m.name, &m.params).map_err(|e| format!("enforcement_profile.{which}: {e}"))
    };
    let profile = EnforcementProfile::new(map("g", &profile_spec.g)?, map("f", &profile_spec.f)?);
    if let Some(sw) = &raw.sweep {
        check_sweep(sw).map_err(|e| format!("sweep: {e}"))?;
    }
    Ok(ScenarioFile { scenario, profile_spec, profile, sweep: raw.sweep })
}

pub const SWEEP_PARAMS: [&str; 7] = ["tau1", "tau2", "z", "lambda", "gamma", "m", "gamma_dot"];

pub fn check_sweep(sw: &SweepSpec) -> Result<(), String> {
    if !SWEEP_PARAMS.contains(&sw.parameter.as_str()) {
        return Err(format!(
            "unknown parameter `{}` (valid: {})",
            sw.parameter,
            SWEEP_PARAMS.join(", ")
        ));
    }
    if sw.steps == 0 {
        return Err("steps must be at least 1".into());
    }
    if !(sw.from.is_finite() && sw.to.is_finite()) {
        return Err("bounds must be finite".into());
    }
    Ok(())
}
