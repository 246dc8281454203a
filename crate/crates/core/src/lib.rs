//! Optimal tax-induced transfer pricing when the arm's length price is a
//! fuzzy number.
//!
//! The crate covers the fuzzy arm's length price, Poisson audit
//! probabilities, the multinational's expected net profit, its closed-form
//! maximizer with a brute-force oracle, comparative statics of the optimum,
//! and the enforcement conditions that keep the optimum inside the fuzzy
//! support.

// `!(a < b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod enforcement;
pub mod error;
pub mod fuzzy;
pub mod optimizer;
pub mod profit;
pub mod sensitivity;

pub use enforcement::{EnforcementProfile, ProfileFn};
pub use error::{Error, Result};
pub use fuzzy::{ArmsLengthPrice, FuzzyNumber, Interval, Shape, Side};
pub use optimizer::{optimal_price, Optimum, Regime};
pub use profit::{classify, Division, Param, ShiftDiagnosis, TaxScenario};
