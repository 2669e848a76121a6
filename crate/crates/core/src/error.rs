use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("iteration budget exhausted: {0}")]
    NoConvergence(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("reduced states differ by {0:.3e}")]
    ReducedStatesDiffer(f64),
    #[error("circuit not supported by backend `{0}`")]
    UnsupportedCircuit(String),
    #[error("ciphertext was not produced under this key")]
    WrongKey,
    #[error("ciphertext could not be decoded: {0}")]
    DecodeFailure(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("prover does not expose white-box operators")]
    NotWhiteBox,
    #[error("strategy is not strongly non-signaling (deviation {0:.3e})")]
    NotStronglyNonsignaling(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operator norm {0:.6} exceeds 1")]
    NormExceeded(f64),
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("empty list")]
    EmptyList,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
