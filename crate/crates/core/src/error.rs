use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside an operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// The circuit or matrix does not describe a physical lossy interferometer.
    #[error("model violation: {0}")]
    Model(String),

    /// A circuit with no transmitted light at all.
    #[error("degenerate circuit: {0}")]
    Degenerate(String),

    /// An oracle or tensor-network resource ceiling was hit. Never raised for
    /// truncation, which this crate does not perform.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Chain-rule sampling ran into a vanishing prefix probability; the caller
    /// should draw again.
    #[error("prefix probability underflow ({0:e}); resample")]
    Resample(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
