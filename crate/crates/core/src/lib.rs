//! Step-bounded halting oracles and the quantum constructions built on them:
//! the diagonal halting observable, the parity-encoding basis permutation,
//! and the single-qubit rotation by the halting-bit constant.
//!
//! The true halting function is replaced everywhere by `h_T`, "halts within
//! `T` steps", on an unbounded-register machine with a total numbering.

pub mod cli;
pub mod machine;
pub mod oracle;
pub mod protocols;
pub mod quantum;
pub mod report;
