//! Fuzzy numbers on the real line and the one-sided arm's length price.
//!
//! A [`FuzzyNumber`] is an LR-type number described by four knots
//! `support_lo <= mode_lo <= mode_hi <= support_hi` and two monotone shape
//! maps on `[0, 1]`. Infinite knots are allowed for one-sided numbers, as
//! long as the infinite side has no ramp.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute x-tolerance when inverting a generic shape by bisection.
pub const CUT_TOLERANCE: f64 = 1e-12;

type ShapeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Monotone non-decreasing map `[0, 1] -> [0, 1]` with `f(0) = 0`, `f(1) = 1`.
///
/// The argument is the normalized distance from the support edge towards
/// the mode.
#[derive(Clone)]
pub enum Shape {
    Linear,
    /// `t^gamma`
    Power(f64),
    Custom(ShapeFn),
}

impl Shape {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Shape::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Shape::Linear => t,
            Shape::Power(gamma) => t.powf(*gamma),
            Shape::Custom(f) => f(t).clamp(0.0, 1.0),
        }
    }

    /// Smallest `t` with `eval(t) >= alpha`. `width` converts the bisection
    /// stopping rule into an x-tolerance.
    fn inverse(&self, alpha: f64, width: f64) -> f64 {
        match self {
            Shape::Linear => alpha,
            Shape::Power(gamma) => alpha.powf(1.0 / gamma),
            Shape::Custom(f) => {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                let tol = if width > 0.0 { CUT_TOLERANCE / width } else { CUT_TOLERANCE };
                for _ in 0..200 {
                    if hi - lo <= tol {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if f(mid) >= alpha {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Linear => write!(f, "Linear"),
            Shape::Power(g) => write!(f, "Power({g})"),
            Shape::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Closed interval `[lo, hi]`; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

#[derive(Debug, Clone)]
pub struct FuzzyNumber {
    support_lo: f64,
    mode_lo: f64,
    mode_hi: f64,
    support_hi: f64,
    lower: Shape,
    upper: Shape,
}

impl FuzzyNumber {
    pub fn new(knots: [f64; 4], lower: Shape, upper: Shape) -> Result<Self> {
        let [a, b, c, d] = knots;
        if knots.iter().any(|k| k.is_nan()) || !(a <= b && b <= c && c <= d) {
            return Err(Error::UnorderedKnots(knots));
        }
        // an infinite side cannot carry a ramp
        if (a.is_infinite() && a != b) || (d.is_infinite() && c != d) || b == f64::INFINITY || c == f64::NEG_INFINITY {
            return Err(Error::UnorderedKnots(knots));
        }
        for shape in [&lower, &upper] {
            if let Shape::Power(g) = shape {
                if !(*g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidGamma(*g));
                }
            }
        }
        Ok(Self { support_lo: a, mode_lo: b, mode_hi: c, support_hi: d, lower, upper })
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::new([a, b, c, d], Shape::Linear, Shape::Linear)
    }

    pub fn triangle(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new([a, b, b, c], Shape::Linear, Shape::Linear)
    }

    pub fn knots(&self) -> [f64; 4] {
        [self.support_lo, self.mode_lo, self.mode_hi, self.support_hi]
    }

    pub fn support(&self) -> Interval {
        Interval { lo: self.support_lo, hi: self.support_hi }
    }

    pub fn mode(&self) -> Interval {
        Interval { lo: self.mode_lo, hi: self.mode_hi }
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x.is_nan() || x < self.support_lo || x > self.support_hi {
            return 0.0;
        }
        if x >= self.mode_lo && x <= self.mode_hi {
            return 1.0;
        }
        if x < self.mode_lo {
            let t = (x - self.support_lo) / (self.mode_lo - self.support_lo);
            self.lower.eval(t)
        } else {
            let t = (self.support_hi - x) / (self.support_hi - self.mode_hi);
            self.upper.eval(t)
        }
    }

    /// `{x : membership(x) >= alpha}` for `alpha` in `(0, 1]`.
    pub fn alpha_cut(&self, alpha: f64) -> Result<Interval> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidAlpha(alpha));
        }
        if alpha > 1.0 {
            return Err(Error::EmptyCut(alpha));
        }
        let lo = if self.mode_lo == self.support_lo {
            self.mode_lo
        } else {
            let width = self.mode_lo - self.support_lo;
            self.support_lo + self.lower.inverse(alpha, width) * width
        };
        let hi = if self.mode_hi == self.support_hi {
            self.mode_hi
        } else {
            let width = self.support_hi - self.mode_hi;
            self.support_hi - self.upper.inverse(alpha, width) * width
        };
        debug_assert!(lo <= hi, "non-convex cut at alpha = {alpha}");
        Ok(Interval { lo, hi })
    }

    /// Rebuilds the membership grade from the cuts on the uniform grid
    /// `alpha_k = k / (n - 1)`, i.e. `sup_k min(alpha_k, 1{x in cut(alpha_k)})`.
    pub fn reconstruct_membership(&self, x: f64, alpha_grid_size: usize) -> Result<f64> {
        if alpha_grid_size < 2 {
            return Err(Error::InvalidArgs(format!(
                "alpha grid needs at least 2 points, got {alpha_grid_size}"
            )));
        }
        let steps = (alpha_grid_size - 1) as f64;
        // cuts are nested, so the first hit from the top is the supremum
        for k in (1..alpha_grid_size).rev() {
            let alpha = k as f64 / steps;
            if self.alpha_cut(alpha)?.contains(x) {
                return Ok(alpha);
            }
        }
        Ok(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Tolerance on prices below the mode.
    Lower,
    /// Tolerance on prices above the mode.
    Upper,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct RawArmsLength {
    side: Side,
    p_edge: f64,
    p_mode: f64,
    gamma: f64,
}

/// One-sided fuzzy arm's length price with a power shape.
///
/// On the interest interval between `p_edge` and `p_mode` the grade is
/// `((p - p_edge) / (p_mode - p_edge))^gamma`; the far side of the mode is
/// saturated at 1 and everything beyond the edge is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArmsLength")]
pub struct ArmsLengthPrice {
    side: Side,
    p_edge: f64,
    p_mode: f64,
    gamma: f64,
}

impl TryFrom<RawArmsLength> for ArmsLengthPrice {
    type Error = Error;

    fn try_from(raw: RawArmsLength) -> Result<Self> {
        ArmsLengthPrice::new(raw.side, raw.p_edge, raw.p_mode, raw.gamma)
    }
}

impl ArmsLengthPrice {
    pub fn new(side: Side, p_edge: f64, p_mode: f64, gamma: f64) -> Result<Self> {
        for (field, v) in [("p_edge", p_edge), ("p_mode", p_mode)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { field, reason: format!("{v} is not finite") });
            }
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidGamma(gamma));
        }
        if p_edge == p_mode {
            return Err(Error::DegenerateRange(p_edge));
        }
        let ordered = match side {
            Side::Lower => p_edge < p_mode,
            Side::Upper => p_edge > p_mode,
        };
        if !ordered {
            return Err(Error::MisorderedBounds { edge: p_edge, mode: p_mode });
        }
        Ok(Self { side, p_edge, p_mode, gamma })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn p_edge(&self) -> f64 {
        self.p_edge
    }

    pub fn p_mode(&self) -> f64 {
        self.p_mode
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.side, self.p_edge, self.p_mode, gamma)
    }

    /// Signed width `p_edge - p_mode`.
    pub fn price_difference(&self) -> f64 {
        self.p_edge - self.p_mode
    }

    pub fn interest_interval(&self) -> Interval {
        Interval { lo: self.p_edge.min(self.p_mode), hi: self.p_edge.max(self.p_mode) }
    }

    pub fn membership(&self, p: f64) -> f64 {
        let t = (p - self.p_edge) / (self.p_mode - self.p_edge);
        if t.is_nan() || t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            t.powf(self.gamma)
        }
    }

    /// Price on the interest interval with grade `alpha`.
    pub fn inverse_membership(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(self.p_edge + alpha.powf(1.0 / self.gamma) * (self.p_mode - self.p_edge))
    }

    pub fn to_fuzzy_number(&self) -> FuzzyNumber {
        let knots = match self.side {
            Side::Lower => [self.p_edge, self.p_mode, f64::INFINITY, f64::INFINITY],
            Side::Upper => [f64::NEG_INFINITY, f64::NEG_INFINITY, self.p_mode, self.p_edge],
        };
        let (lower, upper) = match self.side {
            Side::Lower => (Shape::Power(self.gamma), Shape::Linear),
            Side::Upper => (Shape::Linear, Shape::Power(self.gamma)),
        };
        FuzzyNumber::new(knots, lower, upper).expect("validated on construction")
    }
}

/// Two-sided number from its lower and upper membership sections
/// (pointwise minimum).
pub fn intersect(lower: &ArmsLengthPrice, upper: &ArmsLengthPrice) -> Result<FuzzyNumber> {
    if lower.side != Side::Lower {
        return Err(Error::WrongSide { expected: "lower" });
    }
    if upper.side != Side::Upper {
        return Err(Error::WrongSide { expected: "upper" });
    }
    if lower.p_mode > upper.p_mode {
        return Err(Error::IncompatibleModes { lower: lower.p_mode, upper: upper.p_mode });
    }
    FuzzyNumber::new(
        [lower.p_edge, lower.p_mode, upper.p_mode, upper.p_edge],
        Shape::Power(lower.gamma),
        Shape::Power(upper.gamma),
    )
}
