use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::OracleError;
use crate::machine::{run_bounded, ProgramIndex, RunOutcome};

/// Memoized step-bounded halting table for programs `0..len`, all evaluated
/// on their own index as input at a single step bound.
///
/// Invariant: `records[x] == run_bounded(x, x, bound)` for every stored `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltingSurrogate {
    bound: u64,
    records: Vec<RunOutcome>,
}

impl Default for HaltingSurrogate {
    fn default() -> Self {
        Self::empty()
    }
}

impl HaltingSurrogate {
    pub fn empty() -> Self {
        HaltingSurrogate {
            bound: 0,
            records: Vec::new(),
        }
    }

    /// Runs each program in `0..=x_max` directly up to `bound`.
    pub fn build(x_max: ProgramIndex, bound: u64) -> Result<Self, OracleError> {
        let records = (0..=x_max)
            .map(|x| run_bounded(x, x, bound))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HaltingSurrogate { bound, records })
    }

    /// Assembles a surrogate from precomputed records. Callers are trusted to
    /// supply `run_bounded(x, x, bound)` values; see [`Self::verify`].
    pub(crate) fn from_records(bound: u64, records: Vec<RunOutcome>) -> Self {
        HaltingSurrogate { bound, records }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Largest index with a record, `None` when empty.
    pub fn x_max(&self) -> Option<ProgramIndex> {
        (self.records.len() as u64).checked_sub(1)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[RunOutcome] {
        &self.records
    }

    pub fn record(&self, x: ProgramIndex) -> Option<RunOutcome> {
        self.records.get(usize::try_from(x).ok()?).copied()
    }

    /// `h_T(x)`.
    pub fn halts(&self, x: ProgramIndex) -> Result<bool, OracleError> {
        self.record(x)
            .map(|r| r.is_halted())
            .ok_or(OracleError::NotCovered {
                index: x,
                len: self.records.len() as u64,
            })
    }

    pub fn bits(&self) -> Vec<bool> {
        self.records.iter().map(RunOutcome::is_halted).collect()
    }

    /// Same programs at a higher bound. Halted records carry over unchanged.
    pub fn refine(&self, bound: u64) -> Result<Self, OracleError> {
        if bound < self.bound {
            return Err(OracleError::BoundDecrease {
                from: self.bound,
                to: bound,
            });
        }
        let records = self
            .records
            .iter()
            .enumerate()
            .map(|(x, rec)| match rec {
                RunOutcome::Halted { .. } => Ok(*rec),
                RunOutcome::Exhausted { .. } => run_bounded(x as u64, x as u64, bound),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HaltingSurrogate { bound, records })
    }

    /// Re-runs every program and checks the stored records.
    pub fn verify(&self) -> Result<(), OracleError> {
        for (x, rec) in self.records.iter().enumerate() {
            let fresh = run_bounded(x as u64, x as u64, self.bound)?;
            if fresh != *rec {
                return Err(OracleError::InconsistentRecord { index: x as u64 });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(SurrogateDoc::from(self)).expect("surrogate document serializes")
    }

    /// Parses the JSON table. Records must be listed for `x = 0, 1, 2, …` in order.
    pub fn from_json(doc: &Value) -> Result<Self, OracleError> {
        let doc: SurrogateDoc =
            serde_json::from_value(doc.clone()).map_err(|e| OracleError::Format(e.to_string()))?;
        let mut records = Vec::with_capacity(doc.records.len());
        for (i, rec) in doc.records.iter().enumerate() {
            if rec.x != i as u64 {
                return Err(OracleError::Format(format!(
                    "record {i} has x = {}, expected {i}",
                    rec.x
                )));
            }
            records.push(if rec.halted {
                if rec.steps > doc.bound {
                    return Err(OracleError::Format(format!(
                        "record {i} halts at {} beyond bound {}",
                        rec.steps, doc.bound
                    )));
                }
                RunOutcome::Halted { steps: rec.steps }
            } else {
                if rec.steps != doc.bound {
                    return Err(OracleError::Format(format!(
                        "record {i} is unresolved at {} but the bound is {}",
                        rec.steps, doc.bound
                    )));
                }
                RunOutcome::Exhausted { bound: doc.bound }
            });
        }
        let expected_max = (records.len() as u64).checked_sub(1);
        if doc.x_max != expected_max {
            return Err(OracleError::Format(format!(
                "x_max {:?} does not match {} records",
                doc.x_max,
                records.len()
            )));
        }
        Ok(HaltingSurrogate {
            bound: doc.bound,
            records,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SurrogateDoc {
    #[serde(rename = "T")]
    bound: u64,
    x_max: Option<u64>,
    records: Vec<RecordDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordDoc {
    x: u64,
    halted: bool,
    steps: u64,
}

impl From<&HaltingSurrogate> for SurrogateDoc {
    fn from(s: &HaltingSurrogate) -> Self {
        SurrogateDoc {
            bound: s.bound,
            x_max: s.x_max(),
            records: s
                .records
                .iter()
                .enumerate()
                .map(|(x, rec)| match *rec {
                    RunOutcome::Halted { steps } => RecordDoc {
                        x: x as u64,
                        halted: true,
                        steps,
                    },
                    RunOutcome::Exhausted { bound } => RecordDoc {
                        x: x as u64,
                        halted: false,
                        steps: bound,
                    },
                })
                .collect(),
        }
    }
}
