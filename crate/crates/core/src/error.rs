use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular design: condition number {condition:.3e} exceeds 1e12")]
    SingularDesign { condition: f64 },

    #[error("constraint solver did not converge after {iterations} iterations (last iterate {last:?})")]
    NoConvergence { iterations: usize, last: [f64; 2] },

    #[error("constraint gradient vanishes at ({0}, {1})")]
    ZeroGradient(f64, f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
