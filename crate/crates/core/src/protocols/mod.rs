//! End-to-end experiments: reading halting bits off the diagonal observable
//! (exactly and through a noisy apparatus), decoding them from the parity of
//! a permuted basis state, estimating the halting-bit constant from spin
//! statistics, and checking a candidate oracle against dovetailed runs.

mod halting;
mod omega;
mod verify;

use thiserror::Error;

use crate::machine::MachineError;
use crate::oracle::OracleError;
use crate::quantum::QuantumError;

pub use halting::{
    amplified_halting, halting_observable, interleaving_map, measure_halting, parity_halting,
    AmplificationPlan, AmplifiedOutcome, ParityOutcome,
};
pub use omega::{
    estimate_angle, estimate_omega, exact_perturbation, extract_bits, hoeffding_half_width,
    perturbation_sweep, witness_grid, BitExtraction, ExactPerturbation, OmegaEstimate,
    PerturbationEntry, PerturbationReport, Sampling, MAX_EXTRACTED_BITS,
};
pub use verify::{verify_candidate_oracle, Refutation, VerificationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl ProtocolError {
    /// Parameter mistakes, as opposed to failures while running.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            ProtocolError::InvalidParameter(_)
                | ProtocolError::Quantum(QuantumError::InvalidNoise(_))
                | ProtocolError::Quantum(QuantumError::IndexOutOfRange { .. })
                | ProtocolError::Oracle(OracleError::OutOfUnitInterval(_))
        )
    }
}
