use std::str::FromStr;

use serde_json::Value;

/// Number of decimals printed for real-valued outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Decimals(usize),
    Full,
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Decimals(6)
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "full" {
            return Ok(Precision::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n <= 17 => Ok(Precision::Decimals(n)),
            _ => Err(format!("expected a number of decimals in 0..=17 or `full`, got `{s}`")),
        }
    }
}

impl Precision {
    fn round(self, v: f64) -> f64 {
        match self {
            Precision::Full => v,
            Precision::Decimals(n) => {
                let r: f64 = format!("{v:.n$}").parse().unwrap_or(v);
                // drop the sign of a rounded-away negative value
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    /// JSON number, or `null` when not finite.
    pub fn num(self, v: f64) -> Value {
        if v.is_finite() {
            Value::from(self.round(v))
        } else {
            Value::Null
        }
    }

    pub fn opt(self, v: Option<f64>) -> Value {
        v.map_or(Value::Null, |v| self.num(v))
    }

    /// CSV cell; empty when missing or not finite.
    pub fn cell(self, v: Option<f64>) -> String {
        match v {
            Some(v) if v.is_finite() => match self {
                Precision::Full => v.to_string(),
                Precision::Decimals(n) => format!("{:.n$}", self.round(v)),
            },
            _ => String::new(),
        }
    }
}
