use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{QuantumError, StateVector};

/// Injective map on basis indices with its inverse, checked at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationMap {
    forward: BTreeMap<usize, usize>,
    inverse: BTreeMap<usize, usize>,
}

impl PermutationMap {
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, QuantumError> {
        let mut forward = BTreeMap::new();
        let mut inverse = BTreeMap::new();
        for (x, y) in pairs {
            if let Some(&prev) = inverse.get(&y) {
                if prev != x {
                    return Err(QuantumError::NotInjective {
                        first: prev,
                        second: x,
                        image: y,
                    });
                }
            }
            if let Some(old) = forward.insert(x, y) {
                if old != y {
                    return Err(QuantumError::NotInjective {
                        first: x,
                        second: x,
                        image: y,
                    });
                }
            }
            inverse.insert(y, x);
        }
        Ok(PermutationMap { forward, inverse })
    }

    pub fn identity(dim: usize) -> Self {
        let forward: BTreeMap<usize, usize> = (0..dim).map(|i| (i, i)).collect();
        PermutationMap {
            inverse: forward.clone(),
            forward,
        }
    }

    pub fn image(&self, x: usize) -> Option<usize> {
        self.forward.get(&x).copied()
    }

    pub fn preimage(&self, y: usize) -> Option<usize> {
        self.inverse.get(&y).copied()
    }

    pub fn domain_len(&self) -> usize {
        self.forward.len()
    }

    /// True when the map is a bijection of `0..dim` onto itself.
    pub fn is_closed_on(&self, dim: usize) -> bool {
        (0..dim).all(|x| matches!(self.image(x), Some(y) if y < dim))
            && self.forward.keys().all(|&x| x < dim)
    }

    /// Extends the map to a permutation of `0..dim`: indices below `dim`
    /// outside the domain are sent, in increasing order, to the free images
    /// below `dim`, in increasing order. Fails if any existing pair leaves
    /// `0..dim`.
    pub fn completed(&self, dim: usize) -> Result<Self, QuantumError> {
        if let Some((&x, &y)) = self.forward.iter().find(|(&x, &y)| x >= dim || y >= dim) {
            return Err(QuantumError::Leakage {
                index: x,
                image: y,
                dim,
            });
        }
        let free_domain = (0..dim).filter(|x| !self.forward.contains_key(x));
        let free_images = (0..dim).filter(|y| !self.inverse.contains_key(y));
        let extra: Vec<(usize, usize)> = free_domain.zip(free_images).collect();
        Self::from_pairs(self.forward.iter().map(|(&x, &y)| (x, y)).chain(extra))
    }

    /// Dense matrix `U[y][x] = 1` iff `x ↦ y`, for a map closed on `0..dim`.
    pub fn dense_matrix(&self, dim: usize) -> Result<Vec<Vec<Complex64>>, QuantumError> {
        if !self.is_closed_on(dim) {
            return Err(QuantumError::NotClosed { dim });
        }
        let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for (&x, &y) in &self.forward {
            m[y][x] = Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }
}

/// `U|ψ⟩` for `U = Σ |g(x)⟩⟨x|`. Every index carrying amplitude must be in
/// the map's domain and land below the state's dimension.
pub fn apply_permutation(
    state: &StateVector,
    map: &PermutationMap,
) -> Result<StateVector, QuantumError> {
    let dim = state.dim();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for x in state.support() {
        let y = map.image(x).ok_or(QuantumError::Unmapped { index: x })?;
        if y >= dim {
            return Err(QuantumError::Leakage {
                index: x,
                image: y,
                dim,
            });
        }
        out[y] = state.amplitudes()[x];
    }
    Ok(StateVector::from_raw(out))
}
