use thiserror::Error;

pub type Result<T, E = HatError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HatError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular system: minimum eigenvalue {min_eigenvalue:e}")]
    SingularSystem { min_eigenvalue: f64 },

    #[error("numeric failure after {iterations} iterations: {message}")]
    Numeric { iterations: usize, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scaling constants rejected: need 2*sigma_v > l_v, got sigma_v = {sigma_v}, l_v = {l_v}")]
    Constants { sigma_v: f64, l_v: f64 },

    #[error("subproblem solver failed: {message} (bracket [{lo:e}, {hi:e}])")]
    Solver { message: String, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("format error in column `{column}`: {message}")]
    Format { column: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HatError {
    fn from(err: std::io::Error) -> Self {
        HatError::Io(err.to_string())
    }
}
