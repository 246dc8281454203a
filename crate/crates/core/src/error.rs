use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("degenerate arm's length range: edge and mode coincide at {0}")]
    DegenerateRange(f64),

    #[error("bounds ordered against the side: edge {edge}, mode {mode}")]
    MisorderedBounds { edge: f64, mode: f64 },

    #[error("tolerance parameter must lie in (0, 1], got {0}")]
    InvalidGamma(f64),

    #[error("membership grade must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("alpha-cut at level {0} is empty")]
    EmptyCut(f64),

    #[error("fuzzy number knots out of order: {0:?}")]
    UnorderedKnots([f64; 4]),

    #[error("lower mode bound {lower} exceeds upper mode bound {upper}")]
    IncompatibleModes { lower: f64, upper: f64 },

    #[error("expected a {expected} arm's length price")]
    WrongSide { expected: &'static str },

    #[error("audit intensity must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("invalid arguments: {0}")]
    InvalidArgs(String),

    #[error("quadrature did not converge on (0, {upper}] (last estimate {estimate})")]
    DivergentIntegral { upper: f64, estimate: f64 },

    #[error("outside the domain: {0}")]
    DomainError(String),

    #[error("intra-firm quantity {quantity} exceeds division 2 sales {sales}")]
    NegativeQuantity { quantity: f64, sales: f64 },

    #[error("no profit shifting incentive: tau1 == tau2 == {0}")]
    NoIncentive(f64),

    #[error("{case} case requires a {expected} arm's length price")]
    SideMismatch { case: &'static str, expected: &'static str },

    #[error("price {price} lies beyond the support edge {edge}")]
    OutsideSupport { price: f64, edge: f64 },

    #[error("penalty ratio {0} >= 1: no audit intensity keeps the optimum interior")]
    InfeasiblePenalty(f64),

    #[error("audit intensity {lambda} is not below the threshold {threshold}")]
    NotInEscapeRegime { lambda: f64, threshold: f64 },

    #[error("first-order condition has no root on (0, {upper}]")]
    NoRoot { upper: f64 },

    #[error("cost function of division {division} is not convex at x = {at}")]
    NonConvexCost { division: u8, at: f64 },

    #[error("singular locus: {0}")]
    Singular(&'static str),

    #[error("result {0} is outside (0, 1]")]
    OutOfRange(f64),
}
