use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration value failed validation.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// A call was made outside the contract of the routine (e.g. asking a
    /// tier-0 hierarchy for first-tier data).
    #[error("contract violated: {0}")]
    Contract(String),

    /// A numerical routine did not converge.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The adaptive integrator could not continue.
    #[error("integration failed at t = {t}: step {step:e} fell below the minimum (local error estimate {error_estimate:e})")]
    Integration {
        t: f64,
        step: f64,
        error_estimate: f64,
    },

    /// A size estimate exceeded the configured memory budget.
    #[error("resource budget exceeded: {what} needs {required} but the budget allows {budget}")]
    Resource {
        what: String,
        required: usize,
        budget: usize,
    },

    /// An internal consistency self-check failed.
    #[error("internal self-check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
