use thiserror::Error;

/// Errors produced by every layer of the library.
///
/// Each variant maps onto one machine-readable category (see [`Error::category`])
/// which the CLI and the C ABI surface unchanged.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{field}` out of domain: {reason} (got {value})")]
    ParameterDomain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unit error: {0}")]
    Unit(String),

    #[error("model domain violated: {0}")]
    ModelDomain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("oracle divergence in {check}: {detail}")]
    OracleDivergence { check: &'static str, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, value: f64, reason: &'static str) -> Self {
        Error::ParameterDomain {
            field,
            value,
            reason,
        }
    }

    /// Stable category token, e.g. `parameter-domain`.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ParameterDomain { .. } => "parameter-domain",
            Error::Unit(_) => "unit",
            Error::ModelDomain(_) => "model-domain",
            Error::InsufficientData(_) => "insufficient-data",
            Error::OracleDivergence { .. } => "oracle-divergence",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
