use serde::Serialize;

use super::ProtocolError;
use crate::machine::{decode_program, dovetail_counted, run_bounded, ProgramIndex, RunOutcome};
use crate::oracle::HaltingSurrogate;

/// A program the candidate said would not halt, caught halting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Refutation {
    pub x: ProgramIndex,
    pub steps: u64,
    pub program: String,
}

impl Refutation {
    /// Re-runs the program on its own index and checks it halts in exactly
    /// the recorded number of steps.
    pub fn replay(&self) -> Result<bool, ProtocolError> {
        Ok(run_bounded(self.x, self.x, self.steps)? == RunOutcome::Halted { steps: self.steps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub refutations: Vec<Refutation>,
    /// Indices the candidate says halt that have not been seen halting.
    /// These are never counted against the candidate.
    pub pending: Vec<ProgramIndex>,
    pub consistent: u64,
    pub budget_used: u64,
    /// Common step bound reached by the dovetailer.
    pub bound: u64,
}

impl VerificationReport {
    pub fn is_refuted(&self) -> bool {
        !self.refutations.is_empty()
    }
}

/// Dovetails programs `0..=x_max` within `budget` steps beyond `prior` and
/// compares what halted against `candidate[x]`.
pub fn verify_candidate_oracle(
    candidate: &[bool],
    x_max: ProgramIndex,
    budget: u64,
    prior: &HaltingSurrogate,
) -> Result<VerificationReport, ProtocolError> {
    if (candidate.len() as u64) <= x_max {
        return Err(ProtocolError::InvalidParameter(format!(
            "candidate covers {} indices, need {}",
            candidate.len(),
            x_max + 1
        )));
    }
    let (observed, budget_used) = dovetail_counted(x_max, budget, prior)?;
    let mut report = VerificationReport {
        refutations: Vec::new(),
        pending: Vec::new(),
        consistent: 0,
        budget_used,
        bound: observed.bound(),
    };
    for x in 0..=x_max {
        let predicted = candidate[x as usize];
        match observed.record(x) {
            Some(RunOutcome::Halted { steps }) if !predicted => {
                report.refutations.push(Refutation {
                    x,
                    steps,
                    program: decode_program(x).to_string(),
                })
            }
            Some(RunOutcome::Halted { .. }) => report.consistent += 1,
            _ if predicted => report.pending.push(x),
            _ => report.consistent += 1,
        }
    }
    Ok(report)
}
