use thiserror::Error;

/// Errors raised by the identifiability library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("model evaluation failed at theta = {theta:?}: {reason}")]
    ModelEvaluation { theta: Vec<f64>, reason: String },

    #[error("outer sample {sample}: {source}")]
    AtSample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("invalid chain start: {0}")]
    InvalidStart(String),

    #[error("no ignition: temperature rise {rise:.3} K is below the 50 K threshold")]
    NoIgnition { rise: f64 },

    #[error("step size collapsed to {step:e} s at t = {time:e} s (T = {temperature:.2} K)")]
    Stiffness {
        step: f64,
        time: f64,
        temperature: f64,
        state: Vec<f64>,
    },

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_sample(self, sample: usize) -> Self {
        Error::AtSample {
            sample,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
