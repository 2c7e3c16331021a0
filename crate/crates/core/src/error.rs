use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` out of domain: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("singular state: {0}")]
    Singular(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("integration exceeded {0} steps")]
    MaxSteps(usize),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("newton iteration failed to converge: {0}")]
    NoConvergence(String),

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("series too short: {len} samples (need at least {min})")]
    TooShort { len: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
