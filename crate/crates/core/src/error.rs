use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One rejected line of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number in the source file.
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: last estimate {last_estimate:e}, last change {last_change:e}"
    )]
    Numeric {
        last_estimate: f64,
        last_change: f64,
    },

    #[error("normalized eigenvalue has imaginary part {im:e} (tolerance {tol:e}); check the chi(p)^(-1/2) branch")]
    ImaginaryResidue { im: f64, tol: f64 },

    #[error("normalized eigenvalue {re} lies outside [-2, 2] beyond tolerance {tol:e}: corrupted data or branch mismatch")]
    RamanujanBound { re: f64, tol: f64 },

    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    #[error("dataset rejected:\n{}", format_lines(.0))]
    Dataset(Vec<LineError>),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_lines(errors: &[LineError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::DataIntegrity(msg.into())
    }

    /// Process exit code for the CLI: 1 domain, 2 data integrity, 3 transport.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Numeric { .. } | Error::Config(_) | Error::Io(_) => 1,
            Error::ImaginaryResidue { .. }
            | Error::RamanujanBound { .. }
            | Error::DataIntegrity(_)
            | Error::Dataset(_) => 2,
            Error::Transport(_) => 3,
        }
    }
}
