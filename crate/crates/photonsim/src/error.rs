use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was handed values outside its contract.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A precondition on input data was violated (unsorted streams,
    /// transmission outside [0,1], ...).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Generating a stream would exceed the configured event cap.
    #[error("capacity exceeded: {got} events (cap {cap})")]
    Capacity { got: u64, cap: u64 },
    /// A ratio or normalization is undefined for the given data.
    #[error("undefined quantity: {0}")]
    Undefined(String),
    /// Nonlinear fit failed to converge or produced a singular system.
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
