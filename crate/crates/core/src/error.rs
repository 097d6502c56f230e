use thiserror::Error;

/// Error raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("weight overflow: {0}")]
    WeightOverflow(String),

    #[error("derivative data unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("fixture `{0}` has no closed form")]
    FixtureNotAnalytic(String),

    #[error("linear solve failed at time level {level}: {reason}")]
    LinearSolve { level: usize, reason: String },

    #[error("non-real initial slice: max |Im q(.,0)| = {0:e}")]
    NonRealInitialSlice(f64),

    #[error("trace does not vanish on the boundary: max |q| = {0:e}")]
    NonzeroTrace(f64),

    #[error("inequality violated: right-hand side is zero while left-hand side is {0:e}")]
    InequalityViolation(f64),

    #[error("divisor guard violated: |{name}| = {value:e} < {threshold:e} at node (t={t}, x1={x1}, x2={x2})")]
    DivisorGuard {
        name: &'static str,
        value: f64,
        threshold: f64,
        t: f64,
        x1: f64,
        x2: f64,
    },

    #[error("assumption failed: {0}")]
    Assumption(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit-code family of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Assumption,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Assumption => 4,
        }
    }
}

impl LabError {
    pub fn class(&self) -> ErrorClass {
        match self {
            LabError::Config(_) | LabError::FixtureNotAnalytic(_) | LabError::Io(_) => {
                ErrorClass::Config
            }
            LabError::Assumption(_) | LabError::DivisorGuard { .. } | LabError::NotApplicable(_) => {
                ErrorClass::Assumption
            }
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
