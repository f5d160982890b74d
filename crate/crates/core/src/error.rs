//! Error type shared across the simulator.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scenario or optimizer parameter violates its invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A config file line could not be parsed or names an unknown key.
    #[error("invalid config value (line {line}): {reason}")]
    InvalidConfig { line: usize, reason: String },

    /// Availability regeneration kept leaving a user with zero channels.
    #[error("starved user {user}: no available channel after {attempts} draws")]
    StarvedUser { user: usize, attempts: usize },

    /// A scheme could not produce a feasible solution for this instance.
    #[error("infeasible scenario for {scheme}: {detail}")]
    Infeasible { scheme: &'static str, detail: String },

    /// A hard constraint was violated where the caller promised it held.
    #[error("constraint {constraint} violated at pair {pair}: {detail}")]
    ConstraintViolated {
        constraint: &'static str,
        pair: usize,
        detail: String,
    },

    /// The exhaustive oracle refuses instances above its enumeration bound.
    #[error("oracle instance too large: {detail}")]
    OracleTooLarge { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
