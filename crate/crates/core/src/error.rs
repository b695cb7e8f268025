use thiserror::Error;

/// Errors raised by the optimization library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration (counts, boxes, bounds).
    #[error("configuration error: {0}")]
    Config(String),
    /// Surrogate model could not be built, e.g. Cholesky failed at maximum jitter.
    #[error("model error: {0}")]
    Model(String),
    /// A numerical routine received or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Violated call contract (mismatched lengths and similar).
    #[error("contract error: {0}")]
    Contract(String),
    /// The objective function failed to produce a value.
    #[error("evaluation error: {0}")]
    Evaluation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(format!($($arg)*)) };
}
macro_rules! contract_err {
    ($($arg:tt)*) => { $crate::error::Error::Contract(format!($($arg)*)) };
}
pub(crate) use config_err;
pub(crate) use contract_err;
