use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("interpolation coefficient {0} outside (0, 1]")]
    InvalidAlpha(f64),
    #[error("invalid clamp range [{low}, {high}]: need 0 <= low <= high <= 0.99")]
    InvalidClamp { low: f64, high: f64 },
    #[error("invalid loss spec: {0}")]
    InvalidLossSpec(String),
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    /// Predicted and target box share an edge coordinate; the loss has a kink there.
    #[error("non-differentiable configuration: {0}")]
    NonDifferentiable(String),
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },
    #[error("case {case}: {source}")]
    Case {
        case: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
