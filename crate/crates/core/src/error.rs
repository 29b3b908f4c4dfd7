use thiserror::Error;

/// Errors raised by the numerical machinery and the experiment runners.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    /// Power iteration hit its cap; `best` is the last norm estimate.
    #[error("power iteration did not converge after {iterations} iterations (best estimate {best}, residual {residual:e})")]
    NonConvergence {
        best: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("scale search failed: last bracket [{low}, {high}]")]
    ScaleSearch { low: f64, high: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_cap(what: &'static str, requested: u64, cap: u64) -> Result<()> {
    if requested > cap {
        Err(Error::Resource {
            what,
            requested,
            cap,
        })
    } else {
        Ok(())
    }
}
