//! Truncated statevectors, diagonal projective measurement, basis
//! permutations and the single-qubit `σ_y` rotation.
//!
//! Amplitudes are `Complex64` everywhere, even where every value in this
//! crate's protocols happens to be real.

mod permutation;
mod qubit;
mod rng;
mod state;

use thiserror::Error;

pub use permutation::{apply_permutation, PermutationMap};
pub use qubit::{measure_sigma_z, rotate_qubit, rotation_matrix, Qubit, Spin};
pub use rng::{derive_seed, SeededRng};
pub use state::{
    measure_diagonal, measure_diagonal_noisy, DiagonalObservable, Measurement, NoiseModel,
    StateVector,
};

/// Tolerance on the ℓ² norm of every state.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("basis index {index} outside dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("state norm {norm} is not 1")]
    NotNormalized { norm: f64 },
    #[error("observable has dimension {observable}, state has {state}")]
    DimensionMismatch { observable: usize, state: usize },
    #[error("truncation leakage: index {index} maps to {image}, outside dimension {dim}")]
    Leakage {
        index: usize,
        image: usize,
        dim: usize,
    },
    #[error("index {index} carries amplitude but is not in the permutation's domain")]
    Unmapped { index: usize },
    #[error("map is not injective: {first} and {second} both map to {image}")]
    NotInjective {
        first: usize,
        second: usize,
        image: usize,
    },
    #[error("permutation is not closed on 0..{dim}")]
    NotClosed { dim: usize },
    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),
    #[error("internal numeric error: {0}")]
    Numeric(String),
}
