use thiserror::Error;

/// Errors raised by the analytical model and the trial engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of the operation.
    #[error("{name} = {value} is out of domain (expected {expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("unsupported data rate {rate_bps} bit/s; supported rates (Mbit/s): {supported}")]
    UnknownRate { rate_bps: f64, supported: String },

    /// The per-slot success probability of a link is zero, so the expected
    /// number of slots is unbounded.
    #[error("infeasible link: per-slot delivery probability is zero")]
    InfeasibleLink,

    #[error("p_unsafe = {p_unsafe} is below p_safe = {p_safe}")]
    AccessOrdering { p_safe: f64, p_unsafe: f64 },

    #[error("invalid chain: {0}")]
    Chain(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(
    cond: bool,
    name: &'static str,
    value: f64,
    expected: &'static str,
) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}

pub(crate) fn ensure_probability(name: &'static str, p: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&p), name, p, "a probability in [0, 1]")
}
