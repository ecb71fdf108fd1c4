use serde::Serialize;

use super::ProtocolError;
use crate::machine::ProgramIndex;
use crate::oracle::{HaltingSurrogate, OracleError, RankTable};
use crate::quantum::{
    apply_permutation, measure_diagonal, measure_diagonal_noisy, DiagonalObservable, NoiseModel,
    PermutationMap, QuantumError, SeededRng, StateVector,
};

fn basis_index(x: ProgramIndex, dim: usize) -> Result<usize, ProtocolError> {
    usize::try_from(x)
        .ok()
        .filter(|&i| i < dim)
        .ok_or(ProtocolError::Quantum(QuantumError::IndexOutOfRange {
            index: usize::try_from(x).unwrap_or(usize::MAX),
            dim,
        }))
}

/// `Σ_{x < dim} h_T(x) |x⟩⟨x|`. The surrogate must cover every index below `dim`.
pub fn halting_observable(
    surrogate: &HaltingSurrogate,
    dim: usize,
) -> Result<DiagonalObservable, OracleError> {
    let eigenvalues = (0..dim as u64)
        .map(|x| surrogate.halts(x).map(|h| if h { 1.0 } else { 0.0 }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DiagonalObservable::new(eigenvalues))
}

/// Prepare `|x⟩`, measure the halting observable, return the reading as a bit.
/// For a basis state the reading is `h_T(x)` with probability one.
pub fn measure_halting(
    x: ProgramIndex,
    surrogate: &HaltingSurrogate,
    dim: usize,
    rng: &mut SeededRng,
) -> Result<bool, ProtocolError> {
    let index = basis_index(x, dim)?;
    let observable = halting_observable(surrogate, dim)?;
    let state = StateVector::basis(index, dim)?;
    let m = measure_diagonal(&state, &observable, rng)?;
    Ok(m.outcome == 1.0)
}

/// Repetition count for majority voting over readings that are each wrong
/// with probability at most `epsilon`:
/// `k = ceil(ln(2 / (1 - confidence)) / (2 (1/2 - epsilon)²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplificationPlan {
    pub epsilon: f64,
    pub confidence: f64,
    pub repetitions: u64,
}

impl AmplificationPlan {
    pub fn new(epsilon: f64, confidence: f64) -> Result<Self, ProtocolError> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(ProtocolError::InvalidParameter(format!(
                "epsilon {epsilon} not in [0, 1/2)"
            )));
        }
        if !(confidence > 0.5 && confidence < 1.0) {
            return Err(ProtocolError::InvalidParameter(format!(
                "confidence {confidence} not in (1/2, 1)"
            )));
        }
        let margin = 0.5 - epsilon;
        let k = ((2.0 / (1.0 - confidence)).ln() / (2.0 * margin * margin)).ceil();
        Ok(AmplificationPlan {
            epsilon,
            confidence,
            repetitions: (k as u64).max(1),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplifiedOutcome {
    pub bit: bool,
    pub votes_for_one: u64,
    pub repetitions: u64,
}

/// Majority vote over `k` independent noisy readings of `|x⟩`, each rounded
/// to the nearest eigenvalue. A tied vote reports 0.
pub fn amplified_halting(
    x: ProgramIndex,
    surrogate: &HaltingSurrogate,
    dim: usize,
    noise: NoiseModel,
    confidence: f64,
    rng: &mut SeededRng,
) -> Result<AmplifiedOutcome, ProtocolError> {
    let plan = AmplificationPlan::new(noise.epsilon(), confidence)?;
    let index = basis_index(x, dim)?;
    let observable = halting_observable(surrogate, dim)?;
    let mut votes_for_one = 0u64;
    for _ in 0..plan.repetitions {
        // Each repetition starts from a freshly prepared |x⟩.
        let state = StateVector::basis(index, dim)?;
        let m = measure_diagonal_noisy(&state, &observable, noise, rng)?;
        if observable.round(m.outcome) == Some(1.0) {
            votes_for_one += 1;
        }
    }
    Ok(AmplifiedOutcome {
        bit: 2 * votes_for_one > plan.repetitions,
        votes_for_one,
        repetitions: plan.repetitions,
    })
}

/// The interleaving map of the table's prefix as a basis permutation.
pub fn interleaving_map(table: &RankTable) -> Result<PermutationMap, ProtocolError> {
    let pairs = table
        .pairs()
        .map(|(x, y)| {
            let x = usize::try_from(x).map_err(|_| too_large(x))?;
            let y = usize::try_from(y).map_err(|_| too_large(y))?;
            Ok((x, y))
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    Ok(PermutationMap::from_pairs(pairs)?)
}

fn too_large(v: u64) -> ProtocolError {
    ProtocolError::InvalidParameter(format!("index {v} does not fit in usize"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParityOutcome {
    /// Basis index read after the permutation.
    pub image: u64,
    /// Parity of `image`: odd means halting.
    pub bit: bool,
}

/// Prepare `|x⟩`, apply `U = Σ |g(x)⟩⟨x|`, read the basis index `x'` and
/// report its parity.
pub fn parity_halting(
    x: ProgramIndex,
    table: &RankTable,
    dim: usize,
    rng: &mut SeededRng,
) -> Result<ParityOutcome, ProtocolError> {
    table.image(x)?;
    let index = basis_index(x, dim)?;
    let map = interleaving_map(table)?;
    let state = StateVector::basis(index, dim)?;
    let evolved = apply_permutation(&state, &map)?;
    let m = measure_diagonal(&evolved, &DiagonalObservable::position(dim), rng)?;
    let image = m.index as u64;
    Ok(ParityOutcome {
        image,
        bit: image % 2 == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::halts_within;

    #[test]
    fn exact_measurement_examples() {
        let s = HaltingSurrogate::build(15, 1_000_000).unwrap();
        let mut rng = SeededRng::new(1);
        assert!(measure_halting(0, &s, 16, &mut rng).unwrap());
        assert!(!measure_halting(7, &s, 16, &mut rng).unwrap());
        assert!(measure_halting(16, &s, 16, &mut rng).is_err());
        // Dimension beyond the surrogate's coverage.
        assert!(matches!(
            measure_halting(0, &s, 17, &mut rng),
            Err(ProtocolError::Oracle(OracleError::NotCovered { .. }))
        ));
    }

    #[test]
    fn exact_measurement_agrees_with_direct_runs() {
        let s = HaltingSurrogate::build(999, 1_000).unwrap();
        let mut rng = SeededRng::new(77);
        for x in 0..1000u64 {
            assert_eq!(
                measure_halting(x, &s, 1000, &mut rng).unwrap(),
                halts_within(x, 1_000).unwrap()
            );
        }
    }

    #[test]
    fn plan_examples() {
        assert_eq!(AmplificationPlan::new(0.2, 0.999).unwrap().repetitions, 43);
        assert_eq!(AmplificationPlan::new(0.3, 0.99).unwrap().repetitions, 67);
        // ln(4)/0.5 = 2.77
        assert_eq!(
            AmplificationPlan::new(0.0, 0.5 + 1e-12)
                .unwrap()
                .repetitions,
            3
        );
        assert!(AmplificationPlan::new(0.5, 0.9).is_err());
        assert!(AmplificationPlan::new(0.1, 0.5).is_err());
        assert!(AmplificationPlan::new(0.1, 1.0).is_err());
    }

    #[test]
    fn noiseless_amplification_is_unanimous() {
        let s = HaltingSurrogate::build(15, 10_000).unwrap();
        let mut rng = SeededRng::new(3);
        for x in 0..16u64 {
            let out = amplified_halting(x, &s, 16, NoiseModel::exact(), 0.999, &mut rng).unwrap();
            let h = s.halts(x).unwrap();
            assert_eq!(out.bit, h);
            assert_eq!(out.votes_for_one, if h { out.repetitions } else { 0 });
        }
    }

    #[test]
    fn parity_examples_on_hypothetical_prefix() {
        let table = RankTable::from_bits(&[true, false, false, true]);
        let mut rng = SeededRng::new(0);
        assert_eq!(
            parity_halting(0, &table, 4, &mut rng).unwrap(),
            ParityOutcome {
                image: 1,
                bit: true
            }
        );
        assert_eq!(
            parity_halting(1, &table, 4, &mut rng).unwrap(),
            ParityOutcome {
                image: 0,
                bit: false
            }
        );
        assert!(matches!(
            parity_halting(4, &table, 8, &mut rng),
            Err(ProtocolError::Oracle(OracleError::TableTooShort { .. }))
        ));
    }

    #[test]
    fn parity_reports_leakage() {
        // All ones: index 3 maps to 7.
        let table = RankTable::from_bits(&[true; 4]);
        let err = parity_halting(3, &table, 4, &mut SeededRng::new(0)).unwrap_err();
        assert_eq!(
            err,
            ProtocolError::Quantum(QuantumError::Leakage {
                index: 3,
                image: 7,
                dim: 4
            })
        );
    }

    #[test]
    fn parity_agrees_with_measurement() {
        let s = HaltingSurrogate::build(127, 10_000).unwrap();
        let table = RankTable::from_surrogate(&s);
        let mut rng = SeededRng::new(9);
        for x in 0..128u64 {
            let p = parity_halting(x, &table, 256, &mut rng).unwrap();
            assert_eq!(p.bit, measure_halting(x, &s, 128, &mut rng).unwrap());
            assert_eq!(p.image, table.image(x).unwrap());
        }
    }
}
