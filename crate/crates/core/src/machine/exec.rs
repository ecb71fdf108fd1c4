use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{decode_program, Instruction, MachineError, Program, ProgramIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    /// Halted after exactly `steps` instruction dispatches.
    Halted { steps: u64 },
    /// Still running after `bound` steps.
    Exhausted { bound: u64 },
}

impl RunOutcome {
    pub fn is_halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

/// Observable snapshot of a running machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineState {
    /// Nonzero registers only.
    pub registers: BTreeMap<u64, u64>,
    pub pc: u64,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Inc(usize),
    DecJz(usize, u64),
}

/// A program compiled onto dense register slots, plus its live state.
///
/// Only registers the program mentions can ever change, so they are mapped
/// to a small vector at construction time.
#[derive(Debug, Clone)]
pub struct Execution {
    ops: Vec<Op>,
    slot_registers: Vec<u64>,
    slots: Vec<u64>,
    pc: u64,
    steps: u64,
}

impl Execution {
    pub fn new(program: &Program, input: u64) -> Self {
        let mut index: BTreeMap<u64, usize> = BTreeMap::new();
        index.insert(0, 0);
        let mut slot_registers = vec![0u64];
        let mut slot_of = |reg: u64| {
            *index.entry(reg).or_insert_with(|| {
                slot_registers.push(reg);
                slot_registers.len() - 1
            })
        };
        let ops: Vec<Op> = program
            .instructions()
            .iter()
            .map(|ins| match *ins {
                Instruction::Inc { reg } => Op::Inc(slot_of(reg)),
                Instruction::DecJz { reg, target } => Op::DecJz(slot_of(reg), target),
            })
            .collect();
        let mut slots = vec![0u64; slot_registers.len()];
        slots[0] = input;
        Execution {
            ops,
            slot_registers,
            slots,
            pc: 0,
            steps: 0,
        }
    }

    pub fn is_halted(&self) -> bool {
        self.pc >= self.ops.len() as u64
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Dispatches one instruction. Returns `Ok(true)` once the machine is halted.
    pub fn step(&mut self) -> Result<bool, MachineError> {
        if self.is_halted() {
            return Ok(true);
        }
        match self.ops[self.pc as usize] {
            Op::Inc(slot) => {
                self.slots[slot] = self.slots[slot]
                    .checked_add(1)
                    .ok_or(MachineError::Overflow("register"))?;
                self.pc += 1;
            }
            Op::DecJz(slot, target) => {
                if self.slots[slot] == 0 {
                    self.pc = target;
                } else {
                    self.slots[slot] -= 1;
                    self.pc += 1;
                }
            }
        }
        self.steps = self
            .steps
            .checked_add(1)
            .ok_or(MachineError::Overflow("step counter"))?;
        Ok(self.is_halted())
    }

    /// Steps until halted or until `bound` total steps have been taken.
    pub fn run_to(&mut self, bound: u64) -> Result<RunOutcome, MachineError> {
        while !self.is_halted() && self.steps < bound {
            self.step()?;
        }
        Ok(self.outcome(bound))
    }

    fn outcome(&self, bound: u64) -> RunOutcome {
        if self.is_halted() {
            RunOutcome::Halted { steps: self.steps }
        } else {
            RunOutcome::Exhausted { bound }
        }
    }

    pub fn state(&self) -> MachineState {
        MachineState {
            registers: self
                .slot_registers
                .iter()
                .zip(&self.slots)
                .filter(|(_, &v)| v != 0)
                .map(|(&r, &v)| (r, v))
                .collect(),
            pc: self.pc,
            steps: self.steps,
        }
    }
}

pub fn run_program(program: &Program, input: u64, bound: u64) -> Result<RunOutcome, MachineError> {
    Execution::new(program, input).run_to(bound)
}

/// Runs program `x` with register 0 holding `input`, for at most `bound` steps.
pub fn run_bounded(x: ProgramIndex, input: u64, bound: u64) -> Result<RunOutcome, MachineError> {
    run_program(&decode_program(x), input, bound)
}

/// The step-bounded halting indicator: does program `x` halt on input `x`
/// within `bound` steps?
pub fn halts_within(x: ProgramIndex, bound: u64) -> Result<bool, MachineError> {
    Ok(run_bounded(x, x, bound)?.is_halted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Instruction::{DecJz, Inc};
    use proptest::prelude::*;

    #[test]
    fn empty_program_halts_immediately() {
        assert_eq!(run_bounded(0, 0, 0), Ok(RunOutcome::Halted { steps: 0 }));
    }

    #[test]
    fn single_increment() {
        assert_eq!(run_bounded(1, 1, 10), Ok(RunOutcome::Halted { steps: 1 }));
        assert_eq!(run_bounded(1, 1, 0), Ok(RunOutcome::Exhausted { bound: 0 }));
    }

    #[test]
    fn looper_never_halts() {
        assert_eq!(
            run_bounded(7, 7, 1_000_000),
            Ok(RunOutcome::Exhausted { bound: 1_000_000 })
        );
    }

    #[test]
    fn jump_past_end_halts() {
        let p = Program::new(vec![DecJz { reg: 3, target: 99 }, Inc { reg: 0 }]);
        assert_eq!(run_program(&p, 0, 10), Ok(RunOutcome::Halted { steps: 1 }));
    }

    #[test]
    fn transfer_loop_moves_register() {
        // r1 += r0; r0 = 0, using r2 as an always-zero register for the back jump.
        let p = Program::new(vec![
            DecJz { reg: 0, target: 3 },
            Inc { reg: 1 },
            DecJz { reg: 2, target: 0 },
        ]);
        let mut exec = Execution::new(&p, 4);
        let out = exec.run_to(1000).unwrap();
        // 4 iterations × 3 dispatches, then the final DECJZ jump.
        assert_eq!(out, RunOutcome::Halted { steps: 13 });
        let st = exec.state();
        assert_eq!(st.registers, BTreeMap::from([(1, 4)]));
        assert_eq!(st.pc, 3);
    }

    #[test]
    fn register_overflow_is_reported() {
        let p = Program::new(vec![Inc { reg: 0 }]);
        assert_eq!(
            run_program(&p, u64::MAX, 5),
            Err(MachineError::Overflow("register"))
        );
    }

    #[test]
    fn halts_within_is_bound_sensitive() {
        assert_eq!(halts_within(0, 0), Ok(true));
        assert_eq!(halts_within(1, 0), Ok(false));
        assert_eq!(halts_within(1, 1), Ok(true));
        assert_eq!(halts_within(7, 1_000_000), Ok(false));
    }

    proptest! {
        #[test]
        fn deterministic(x in 0u64..20_000, bound in 0u64..500) {
            prop_assert_eq!(run_bounded(x, x, bound), run_bounded(x, x, bound));
        }

        #[test]
        fn halting_is_monotone_in_bound(x in 0u64..20_000, bound in 0u64..300, extra in 0u64..300) {
            if let RunOutcome::Halted { steps } = run_bounded(x, x, bound).unwrap() {
                prop_assert!(steps <= bound);
                prop_assert_eq!(
                    run_bounded(x, x, bound + extra).unwrap(),
                    RunOutcome::Halted { steps }
                );
            }
        }
    }
}
