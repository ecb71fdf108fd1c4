//! Unbounded-register machine (URM) with a total Gödel numbering.
//!
//! Programs are finite lists of two instructions:
//!
//! * `INC r` increments register `r` and falls through.
//! * `DECJZ r a` jumps to `a` when register `r` is zero, otherwise decrements
//!   it and falls through.
//!
//! A program halts when its program counter leaves the instruction list, so
//! every finite list is a valid program and the numbering below is a
//! bijection between `u64` indices and the programs whose encodings fit in
//! 64 bits.

mod dovetail;
mod exec;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dovetail::{dovetail, dovetail_counted};
pub use exec::{halts_within, run_bounded, run_program, Execution, MachineState, RunOutcome};

/// Canonical index of a program in the enumeration.
pub type ProgramIndex = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    Inc { reg: u64 },
    DecJz { reg: u64, target: u64 },
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Inc { reg } => write!(f, "INC {reg}"),
            Instruction::DecJz { reg, target } => write!(f, "DECJZ {reg} {target}"),
        }
    }
}

impl Instruction {
    /// `INC r` ↦ `2r`, `DECJZ r a` ↦ `2·pair(r, a) + 1`.
    pub fn encode(&self) -> Result<u64, MachineError> {
        match *self {
            Instruction::Inc { reg } => reg
                .checked_mul(2)
                .ok_or(MachineError::Overflow("instruction encoding")),
            Instruction::DecJz { reg, target } => pair(reg, target)?
                .checked_mul(2)
                .and_then(|v| v.checked_add(1))
                .ok_or(MachineError::Overflow("instruction encoding")),
        }
    }

    pub fn decode(code: u64) -> Self {
        if code.is_multiple_of(2) {
            Instruction::Inc { reg: code / 2 }
        } else {
            let (reg, target) = unpair(code / 2);
            Instruction::DecJz { reg, target }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Program {
    instructions: Vec<Instruction>,
}

impl Program {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Program { instructions }
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.instructions.is_empty() {
            return f.write_str("<empty>");
        }
        for (i, ins) in self.instructions.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{ins}")?;
        }
        Ok(())
    }
}

/// Cantor pairing `(a+b)(a+b+1)/2 + b`.
pub fn pair(a: u64, b: u64) -> Result<u64, MachineError> {
    let s = a as u128 + b as u128;
    let value = s * (s + 1) / 2 + b as u128;
    u64::try_from(value).map_err(|_| MachineError::Overflow("pair"))
}

/// Inverse of [`pair`]; total on `u64`.
pub fn unpair(n: u64) -> (u64, u64) {
    let n = n as u128;
    // w is the diagonal index: the largest w with w(w+1)/2 <= n.
    let w = ((8 * n + 1).isqrt() - 1) / 2;
    let t = w * (w + 1) / 2;
    let b = n - t;
    let a = w - b;
    (a as u64, b as u64)
}

/// Empty list ↦ 0, `h :: t` ↦ `pair(code(h), code(t)) + 1`.
pub fn encode_program(program: &Program) -> Result<ProgramIndex, MachineError> {
    program
        .instructions
        .iter()
        .rev()
        .try_fold(0u64, |tail, ins| {
            pair(ins.encode()?, tail)?
                .checked_add(1)
                .ok_or(MachineError::Overflow("program encoding"))
        })
}

pub fn decode_program(index: ProgramIndex) -> Program {
    let mut instructions = Vec::new();
    let mut rest = index;
    while rest > 0 {
        let (head, tail) = unpair(rest - 1);
        instructions.push(Instruction::decode(head));
        rest = tail;
    }
    Program { instructions }
}
