use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} lies outside the admissible interval [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A state endpoint sits on the bound that the window function saturates
    /// at, so switching time and energy diverge logarithmically.
    #[error("state {value} coincides with the saturating bound; switching time diverges")]
    SaturatingEndpoint { value: f64 },

    #[error("amplitude {voltage} V cannot drive the requested transition")]
    InfeasibleAmplitude { voltage: f64 },

    #[error("programming time {requested} s is shorter than the minimum switching time {min_duration} s")]
    Infeasible { requested: f64, min_duration: f64 },

    #[error("programming time {requested} s lies outside the open interval ({lo}, {hi}) s of this regime")]
    Regime { requested: f64, lo: f64, hi: f64 },

    #[error("no sign change on bracket [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("adaptive step underflow at t = {t} (h = {step})")]
    Stiffness { t: f64, step: f64 },

    #[error("state evolution function vanishes at x = {x}")]
    Singular { x: f64 },

    #[error("operation requires a {expected} device model")]
    ModelMismatch { expected: &'static str },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
