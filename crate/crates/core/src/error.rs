//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scenario construction, channel evaluation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("user region has negative extent ({0})")]
    InvalidRegion(String),

    #[error("zero distance between antenna and user")]
    ZeroDistance,

    #[error("antenna layout infeasible: {0}")]
    InfeasibleLayout(String),

    #[error("index out of bounds: {0}")]
    IndexOutOfBounds(String),

    #[error("singular beamforming system on carrier {carrier} (mu = {mu})")]
    SingularSystem { carrier: usize, mu: f64 },

    #[error("power bracket expansion failed after {doublings} doublings (power {power} > budget {budget})")]
    BracketExpansion {
        doublings: usize,
        power: f64,
        budget: f64,
    },

    #[error("common-rate allocation infeasible on carrier {carrier}: allocated {allocated} > cap {cap}")]
    InfeasibleAllocation {
        carrier: usize,
        allocated: f64,
        cap: f64,
    },

    #[error("negative SINR {0} rejected")]
    NegativeSinr(f64),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
