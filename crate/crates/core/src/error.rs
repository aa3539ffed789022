use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or inconsistent dimensions.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The numerical problem has no usable answer (zero matrix, rank deficiency
    /// where full rank is required, vanishing norm).
    #[error("degenerate problem: {0}")]
    Degeneracy(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    /// A statistic was requested from a surrogate whose basis does not carry
    /// the required orthonormality.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("evaluation error at node {node}: {message}")]
    Evaluation { node: usize, message: String },

    /// A user-supplied evaluator failed at `point`.
    #[error("evaluator failed at {point:?}: {message}")]
    Evaluator { point: Vec<f64>, message: String },

    #[error("format error (line {line}): {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}
