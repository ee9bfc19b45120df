use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("observable is not a Hermitian involution (defect {0:e})")]
    NotInvolution(f64),
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("channel is not trace preserving (defect {0:e})")]
    NotTracePreserving(f64),
    #[error("expected a {expected}-qubit gate, got {actual} qubits")]
    WrongArity { expected: usize, actual: usize },
    #[error("ensemble average input is not maximally mixed (defect {0:e})")]
    EnsembleNotUniform(f64),
    #[error("argument outside the function domain: {0}")]
    DomainError(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("epsilon {epsilon} is below the admissible minimum {minimum}")]
    EpsilonTooSmall { epsilon: f64, minimum: f64 },
    #[error("not certifiable: {0}")]
    NotCertifiable(String),
    #[error("need at least {needed} points in the fit range, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("linear inversion is rank deficient")]
    RankDeficient,
    #[error("probe/measurement set is not informationally complete")]
    NotInformationallyComplete,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
