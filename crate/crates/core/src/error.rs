use thiserror::Error;

/// Errors produced by the mesh, solver and estimator layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("mesh and problem are posed on different rectangles")]
    DomainMismatch,

    #[error("unsupported quadrature order {0} (supported: 1..=7)")]
    UnsupportedQuadratureOrder(usize),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("estimator out of scope: {0}")]
    Scope(String),

    #[error("Aubin majorant undefined at sigma=0")]
    AubinAtZeroSigma,

    #[error("oracle sigma* requires the exact error pair")]
    OracleWithoutExactData,

    #[error("oracle sigma* undefined: zero L2 error (v is the exact solution)")]
    ExactSolution,

    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),

    #[error("config: unknown keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("config: invalid value for `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
