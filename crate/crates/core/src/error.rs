use thiserror::Error;

/// Errors raised across the certification and simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense size cap exceeded: {size} > {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("missing constant `{constant}`: {remedy}")]
    MissingConstant { constant: String, remedy: String },

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("grid does not cover the tail mass; required box half-width at least {required:.3}")]
    TailCoverage { required: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration diverged at step {step} (replica {replica}): {detail}")]
    Diverged {
        step: u64,
        replica: usize,
        detail: String,
    },

    #[error("no decay fit: {0}")]
    NoFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &str, xs: &[f64]) -> Result<()> {
    if let Some(i) = xs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what}[{i}] = {}", xs[i])));
    }
    Ok(())
}
