use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HairError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("logarithm of a non-positive tower")]
    NonPositiveLog,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("value leaves machine range, needs log-lift")]
    NeedsLogLift,
    #[error("no log model for this family")]
    NoLogModel,
    #[error("families do not form a semiconjugate pair")]
    MismatchedPair,
    #[error("R = {0} below escape threshold (M(R) <= R)")]
    InadmissibleR(f64),
    #[error("address diverged at step {0}")]
    AddressDivergence(usize),
    #[error("quadrature did not converge on panel [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
    #[error("bisection failed; required ln eps about {0}")]
    Bisection(f64),
    #[error("point outside tract: ({0}, {1})")]
    OutsideTract(f64, f64),
    #[error("invalid plan: {0}")]
    Plan(String),
}

pub type Result<T> = std::result::Result<T, HairError>;
