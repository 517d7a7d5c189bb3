use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("map is not concave (leading coefficient {0}); no unique maximum")]
    NotConcave(f64),
    #[error("operation requires the quadratic basis, map uses {0:?}")]
    UnsupportedBasis(crate::model::Basis),
    #[error("(I - phi) is singular; plant is marginally stable")]
    SingularGain,
    #[error("steady-state gain is zero; cannot normalize")]
    ZeroGain,
    #[error("unstable {what}: spectral radius {radius:.4} >= 1")]
    Unstable { what: &'static str, radius: f64 },
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite performance sample {value} at iteration {iteration}")]
    NonFinite { iteration: usize, value: f64 },
    #[error("trace format: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}
