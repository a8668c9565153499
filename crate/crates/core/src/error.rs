use thiserror::Error;

/// Errors surfaced by evaluators, samplers and the sweep driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("gamma function pole at {0}")]
    Pole(f64),
    #[error("result overflows f64 (ln value {ln_value})")]
    Overflow { ln_value: f64 },
    #[error("invalid Meijer G parameters: {0}")]
    Spec(String),
    #[error("no convergence: {detail} (best estimate {estimate:e}, error estimate {error:e})")]
    NonConvergence {
        detail: String,
        estimate: f64,
        error: f64,
    },
    #[error("degenerate moments: {0}")]
    Degenerate(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn non_convergence(detail: impl Into<String>, estimate: f64, error: f64) -> Self {
        Error::NonConvergence {
            detail: detail.into(),
            estimate,
            error,
        }
    }
}
