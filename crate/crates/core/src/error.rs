use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("party index {index} out of range for {parties} parties")]
    PartyOutOfRange { index: usize, parties: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("probabilities must be nonnegative and sum to 1 (sum = {sum})")]
    Normalization { sum: f64 },

    #[error("witness needs at least two parties")]
    SingleParty,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("symmetry sector is empty")]
    EmptySector,

    #[error("ground state not degenerate (gap {gap:e}, tolerance {tol:e})")]
    NotDegenerate { gap: f64, tol: f64 },

    #[error("order parameter vanishes for every relative phase")]
    NoOrderParameter,

    #[error("non-uniform grid at index {0}")]
    NonUniformGrid(usize),

    #[error("spec error: {0}")]
    Spec(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the command-line driver.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Convergence { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
