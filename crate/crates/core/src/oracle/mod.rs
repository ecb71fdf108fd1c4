//! Computable stand-ins for the halting indicator, the interleaving map and
//! the binary-expansion constant, all relative to a fixed step bound.

mod dyadic;
mod rank;
mod surrogate;

use thiserror::Error;

use crate::machine::{MachineError, ProgramIndex};

pub use dyadic::DyadicRational;
pub use rank::RankTable;
pub use surrogate::HaltingSurrogate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("index {index} is not covered by a surrogate of {len} records")]
    NotCovered { index: ProgramIndex, len: u64 },
    #[error("rank table of length {len} does not cover index {index}")]
    TableTooShort { index: ProgramIndex, len: u64 },
    #[error("preimage of {image} lies outside the rank table prefix")]
    PreimageOutsidePrefix { image: u64 },
    #[error("step bound cannot decrease from {from} to {to}")]
    BoundDecrease { from: u64, to: u64 },
    #[error("record for index {index} does not match a fresh run")]
    InconsistentRecord { index: ProgramIndex },
    #[error("value outside the unit interval: {0}")]
    OutOfUnitInterval(String),
    #[error("malformed surrogate document: {0}")]
    Format(String),
}

/// `Σ_{x ≤ x_max, h_T(x) = 1} 2^-(x+1)` over the surrogate's first
/// `x_max + 1` records; bit `x` of the result is `h_T(x)`.
pub fn omega(
    surrogate: &HaltingSurrogate,
    x_max: ProgramIndex,
) -> Result<DyadicRational, OracleError> {
    let bits = (0..=x_max)
        .map(|x| surrogate.halts(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DyadicRational::from_bits(&bits))
}

/// Builds the surrogate for `0..=x_max` at `bound` and sums it.
pub fn omega_within(x_max: ProgramIndex, bound: u64) -> Result<DyadicRational, OracleError> {
    omega(&HaltingSurrogate::build(x_max, bound)?, x_max)
}
