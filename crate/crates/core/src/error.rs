use thiserror::Error;

/// Errors raised by validation and by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("prior entry p[{index}] = {value} is not strictly positive")]
    NonPositivePrior { index: usize, value: f64 },
    #[error("prior sums to {sum}, not 1")]
    PriorNotNormalized { sum: f64 },
    #[error("|A| = {0}, at least 2 actions are required")]
    TooFewActions(usize),
    #[error("cost[{s}][{a}][{b}] is not finite")]
    NonFiniteCost { s: usize, a: usize, b: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("costs are constant in every state; any feasible point is a solution")]
    DegenerateCosts,
    #[error("policy row for state {state} sums to {sum}, not 1")]
    NotNormalized { state: usize, sum: f64 },
    #[error("policy has a negative or non-finite entry at flat index {0}")]
    InvalidEntry(usize),
    #[error("empty support for state {0}")]
    EmptySupport(usize),
    #[error("support index ({a}, {b}) out of range for state {s}")]
    SupportOutOfRange { s: usize, a: usize, b: usize },
    #[error("policy puts mass {mass} outside the support pattern")]
    SupportViolation { mass: f64 },
    #[error("point is on the boundary of the restricted simplex (flat index {0})")]
    BoundaryPoint(usize),
    #[error("starting point is not in the relative interior (flat index {0})")]
    NotInterior(usize),
    #[error("per-state normalizer vanished for state {0}")]
    NumericalUnderflow(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("multiplier must be positive, got {0}")]
    InvalidLambda(f64),
    #[error("minimal cost is not attainable")]
    NotAttainable,
    #[error("g = {g} at λ_max is not negative; bracket is broken")]
    BracketFailure { g: f64 },
    #[error("bisection did not close the bracket within {0} outer iterations")]
    MaxOuterExceeded(usize),
    #[error("fixed-point iteration did not converge within {0} iterations")]
    MaxInnerExceeded(usize),
    #[error("instance is too large for the grid oracle: {0}")]
    TooLarge(&'static str),
    #[error("no non-attainable instance drawn within {0} attempts")]
    RejectionExhausted(usize),
    #[error("cost is not constant in the action a")]
    NotReducible,
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalUnderflow(_)
                | Error::BracketFailure { .. }
                | Error::MaxOuterExceeded(_)
                | Error::MaxInnerExceeded(_)
                | Error::BoundaryPoint(_)
                | Error::NotInterior(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
