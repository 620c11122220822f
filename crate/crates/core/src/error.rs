use thiserror::Error;

/// Errors raised by the numerical kernels, the simulator and the optimizers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series for {what} did not converge within {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("probability {value} for {what} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { what: &'static str, value: f64 },

    #[error("caching marginals are infeasible: {0}")]
    InfeasibleMarginals(String),

    #[error("instance too large: {count} combinations exceeds cap {cap}")]
    InstanceTooLarge { count: u128, cap: u128 },

    #[error("KKT multiplier bracket cannot reach the cache-size constraint (sum range [{lo}, {hi}], target {target})")]
    InfeasibleSum { lo: f64, hi: f64, target: f64 },

    #[error("CCP objective decreased from {prev} to {next}")]
    NonMonotoneCcp { prev: f64, next: f64 },

    #[error("projected gradient stopped after {iters} iterations without an Armijo step")]
    MaxIters { iters: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}
