use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GlueError {
    #[error("unsupported coefficient regime: {0}")]
    UnsupportedRegime(String),
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("no exact source for element; it arose from approximate input")]
    NoExactSource,
    #[error("torsion did not stabilize by level {cap}; raise the precision")]
    CapExceeded { cap: u32 },
    #[error("incompatible gluing datum: {0}")]
    IncompatibleDatum(String),
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("search exhausted at degree bound {bound}: {frontier}")]
    SearchExhausted { bound: u32, frontier: String },
    #[error("degree bound inconclusive: {0}")]
    DegreeBoundInconclusive(String),
    #[error("verification failed: {check}: witness {witness}")]
    VerificationFailed { check: String, witness: String },
    #[error("not integral: {0}")]
    NotIntegral(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T, E = GlueError> = std::result::Result<T, E>;
