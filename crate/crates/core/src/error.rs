use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("conditioning error in {context}: smallest eigenvalue {min_eigenvalue:e}")]
    Conditioning {
        context: String,
        min_eigenvalue: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("insufficient draws: need at least {needed}, got {got}")]
    InsufficientDraws { needed: usize, got: usize },

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("config error: {0}")]
    Config(String),
}

/// Coarse failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Schema(_)
            | Error::Dimension(_)
            | Error::Domain(_)
            | Error::InsufficientData(_) => ErrorKind::Data,
            Error::Conditioning { .. }
            | Error::Contract(_)
            | Error::Degenerate(_)
            | Error::Coverage(_)
            | Error::DegenerateTest(_)
            | Error::InsufficientDraws { .. }
            | Error::Simulation(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
