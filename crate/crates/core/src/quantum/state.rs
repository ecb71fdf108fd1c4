use num_complex::Complex64;

use super::{QuantumError, SeededRng, NORM_TOLERANCE};

/// Unit-norm state on the truncated basis `|0⟩ … |D-1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes whose norm is already 1 within [`NORM_TOLERANCE`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized { norm });
        }
        Ok(StateVector { amplitudes })
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::NotNormalized { norm });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(StateVector { amplitudes })
    }

    /// `|x⟩` in dimension `dim`.
    pub fn basis(x: usize, dim: usize) -> Result<Self, QuantumError> {
        if x >= dim {
            return Err(QuantumError::IndexOutOfRange { index: x, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[x] = Complex64::new(1.0, 0.0);
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// Born probability of basis index `i`.
    pub fn probability(&self, i: usize) -> f64 {
        self.amplitudes.get(i).map_or(0.0, |a| a.norm_sqr())
    }

    /// Indices with nonzero amplitude.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, _)| i)
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex64>) -> Self {
        StateVector { amplitudes }
    }
}

fn l2_norm(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Observable diagonal in the truncated basis: `Σ λ(x) |x⟩⟨x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    eigenvalues: Vec<f64>,
}

impl DiagonalObservable {
    pub fn new(eigenvalues: Vec<f64>) -> Self {
        DiagonalObservable { eigenvalues }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize) -> f64) -> Self {
        DiagonalObservable {
            eigenvalues: (0..dim).map(f).collect(),
        }
    }

    /// `λ(x) = x`: a measurement that distinguishes every basis state.
    pub fn position(dim: usize) -> Self {
        Self::from_fn(dim, |x| x as f64)
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::from_fn(dim, |_| value)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalue(&self, x: usize) -> Option<f64> {
        self.eigenvalues.get(x).copied()
    }

    /// Distinct eigenvalue nearest to `value` other than `value` itself;
    /// ties go to the smaller one.
    pub fn nearest_other(&self, value: f64) -> Option<f64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|&e| e != value)
            .min_by(|a, b| {
                (a - value)
                    .abs()
                    .total_cmp(&(b - value).abs())
                    .then(a.total_cmp(b))
            })
    }

    /// Eigenvalue closest to `value`; ties go to the smaller one.
    pub fn round(&self, value: f64) -> Option<f64> {
        self.eigenvalues.iter().copied().min_by(|a, b| {
            (a - value)
                .abs()
                .total_cmp(&(b - value).abs())
                .then(a.total_cmp(b))
        })
    }

    /// Renormalized projection of `state` onto the eigenspace of `value`,
    /// or `None` if the state has no weight there.
    fn project(&self, state: &StateVector, value: f64) -> Option<StateVector> {
        let amplitudes: Vec<Complex64> = state
            .amplitudes
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&a, &e)| {
                if e == value {
                    a
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        StateVector::normalized(amplitudes).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Reported value. Equal to the ideal eigenvalue for exact measurements.
    pub outcome: f64,
    /// Basis index drawn by the Born rule.
    pub index: usize,
    /// Whether the reported value came from the ideal branch.
    pub faithful: bool,
    pub post_state: StateVector,
}

/// Projective measurement of a diagonal observable.
///
/// Consumes one uniform draw. Degenerate eigenvalues collapse onto their
/// whole eigenspace.
pub fn measure_diagonal(
    state: &StateVector,
    observable: &DiagonalObservable,
    rng: &mut SeededRng,
) -> Result<Measurement, QuantumError> {
    if observable.dim() != state.dim() {
        return Err(QuantumError::DimensionMismatch {
            observable: observable.dim(),
            state: state.dim(),
        });
    }
    let index = sample_index(state, rng.uniform())?;
    let outcome = observable.eigenvalues[index];
    let post_state = observable
        .project(state, outcome)
        .ok_or_else(|| QuantumError::Numeric(format!("empty eigenspace for {outcome}")))?;
    Ok(Measurement {
        outcome,
        index,
        faithful: true,
        post_state,
    })
}

fn sample_index(state: &StateVector, u: f64) -> Result<usize, QuantumError> {
    let total: f64 = state.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_nonzero = None;
    for (i, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        acc += p;
        last_nonzero = Some(i);
        if target < acc {
            return Ok(i);
        }
    }
    last_nonzero.ok_or_else(|| QuantumError::Numeric("state has no support".into()))
}

/// Approximate-measurement model: with probability `1 - epsilon` the reading
/// is uniform on `λ ± delta` around the ideal eigenvalue `λ`; otherwise it is
/// uniform on the `± delta` interval of the nearest *other* eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    epsilon: f64,
    delta: f64,
}

impl NoiseModel {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, QuantumError> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(QuantumError::InvalidNoise(format!(
                "epsilon {epsilon} not in [0, 1/2)"
            )));
        }
        if !(0.0..0.5).contains(&delta) {
            return Err(QuantumError::InvalidNoise(format!(
                "delta {delta} not in [0, 1/2)"
            )));
        }
        Ok(NoiseModel { epsilon, delta })
    }

    pub fn exact() -> Self {
        NoiseModel {
            epsilon: 0.0,
            delta: 0.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Noisy variant of [`measure_diagonal`]. Always consumes three uniform
/// draws: the Born sample (identical to the exact measurement), the failure
/// coin and the in-interval jitter.
///
/// On failure the post-state is the projection onto the wrong eigenvalue's
/// eigenspace when the state has weight there, and the ideal projection
/// otherwise.
pub fn measure_diagonal_noisy(
    state: &StateVector,
    observable: &DiagonalObservable,
    noise: NoiseModel,
    rng: &mut SeededRng,
) -> Result<Measurement, QuantumError> {
    let ideal = measure_diagonal(state, observable, rng)?;
    let fails = rng.bernoulli(noise.epsilon);
    let jitter = noise.delta * (2.0 * rng.uniform() - 1.0);
    let wrong = if fails {
        observable.nearest_other(ideal.outcome)
    } else {
        None
    };
    Ok(match wrong {
        None => Measurement {
            outcome: ideal.outcome + jitter,
            ..ideal
        },
        Some(value) => Measurement {
            outcome: value + jitter,
            index: ideal.index,
            faithful: false,
            post_state: observable.project(state, value).unwrap_or(ideal.post_state),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_states() {
        let s = StateVector::basis(0, 4).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let s = StateVector::basis(3, 4).unwrap();
        assert_eq!(s.amplitudes(), &[c(0.0), c(0.0), c(0.0), c(1.0)]);
        assert_eq!(s.norm(), 1.0);
        assert_eq!(
            StateVector::basis(4, 4),
            Err(QuantumError::IndexOutOfRange { index: 4, dim: 4 })
        );
    }

    #[test]
    fn constructor_checks_norm() {
        assert!(StateVector::new(vec![c(1.0), c(1.0)]).is_err());
        assert!(StateVector::normalized(vec![c(0.0), c(0.0)]).is_err());
        let s = StateVector::normalized(vec![c(3.0), Complex64::new(0.0, 4.0)]).unwrap();
        assert!((s.norm() - 1.0).abs() < NORM_TOLERANCE);
        assert!((s.probability(0) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn basis_state_measures_its_eigenvalue() {
        let obs = DiagonalObservable::new(vec![1.0, 0.0, 0.0, 1.0]);
        for seed in 0..20 {
            let mut rng = SeededRng::new(seed);
            for x in 0..4 {
                let s = StateVector::basis(x, 4).unwrap();
                let m = measure_diagonal(&s, &obs, &mut rng).unwrap();
                assert_eq!(m.outcome, obs.eigenvalue(x).unwrap());
                assert_eq!(m.post_state, s);
            }
        }
    }

    #[test]
    fn constant_observable_leaves_state_alone() {
        let s = StateVector::normalized(vec![c(1.0), Complex64::new(0.0, 2.0), c(-1.0)]).unwrap();
        let obs = DiagonalObservable::constant(3, 2.5);
        let m = measure_diagonal(&s, &obs, &mut SeededRng::new(3)).unwrap();
        assert_eq!(m.outcome, 2.5);
        for (a, b) in m.post_state.amplitudes().iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn degenerate_eigenspace_projection() {
        let s = StateVector::normalized(vec![c(1.0), c(1.0), c(1.0), c(1.0)]).unwrap();
        let obs = DiagonalObservable::new(vec![0.0, 1.0, 0.0, 1.0]);
        let m = measure_diagonal(&s, &obs, &mut SeededRng::new(11)).unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        for (i, a) in m.post_state.amplitudes().iter().enumerate() {
            let want = if obs.eigenvalue(i) == Some(m.outcome) {
                expected
            } else {
                0.0
            };
            assert!((a.re - want).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = StateVector::basis(0, 2).unwrap();
        let obs = DiagonalObservable::position(3);
        assert!(matches!(
            measure_diagonal(&s, &obs, &mut SeededRng::new(0)),
            Err(QuantumError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_qubit_frequencies() {
        let s = StateVector::normalized(vec![c(1.0), c(1.0)]).unwrap();
        let obs = DiagonalObservable::position(2);
        let mut rng = SeededRng::new(2024);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| measure_diagonal(&s, &obs, &mut rng).unwrap().outcome == 1.0)
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq={freq}");
        // Chi-square with one degree of freedom, 99.9% critical value.
        let expected = n as f64 / 2.0;
        let chi2 =
            ((ones as f64 - expected).powi(2) + ((n - ones) as f64 - expected).powi(2)) / expected;
        assert!(chi2 < 10.83, "chi2={chi2}");
    }

    #[test]
    fn noise_parameter_ranges() {
        assert!(NoiseModel::new(0.5, 0.1).is_err());
        assert!(NoiseModel::new(0.1, 0.5).is_err());
        assert!(NoiseModel::new(-0.1, 0.1).is_err());
        assert!(NoiseModel::new(f64::NAN, 0.1).is_err());
        assert!(NoiseModel::new(0.49, 0.49).is_ok());
    }

    #[test]
    fn zero_noise_matches_exact() {
        let s = StateVector::normalized(vec![c(1.0), c(2.0), c(0.5), c(1.0)]).unwrap();
        let obs = DiagonalObservable::new(vec![0.0, 1.0, 1.0, 0.0]);
        for seed in 0..200 {
            let exact = measure_diagonal(&s, &obs, &mut SeededRng::new(seed)).unwrap();
            let noisy =
                measure_diagonal_noisy(&s, &obs, NoiseModel::exact(), &mut SeededRng::new(seed))
                    .unwrap();
            assert_eq!(noisy, exact);
        }
    }

    #[test]
    fn noisy_reading_of_halting_basis_state() {
        let obs = DiagonalObservable::new(vec![1.0, 0.0]);
        let s = StateVector::basis(0, 2).unwrap();
        let noise = NoiseModel::new(0.1, 0.2).unwrap();
        let mut rng = SeededRng::new(99);
        let n = 10_000;
        let mut inside = 0;
        let mut rounded_right = 0;
        for _ in 0..n {
            let m = measure_diagonal_noisy(&s, &obs, noise, &mut rng).unwrap();
            if (0.8..=1.2).contains(&m.outcome) {
                inside += 1;
                assert!(m.faithful);
            } else {
                assert!((-0.2..=0.2).contains(&m.outcome));
                assert!(!m.faithful);
                // No weight on the wrong eigenspace, so the state is untouched.
                assert_eq!(m.post_state, s);
            }
            if obs.round(m.outcome) == Some(1.0) {
                rounded_right += 1;
            }
        }
        let freq = inside as f64 / n as f64;
        assert!(freq >= 0.9 - 0.01, "freq={freq}");
        assert_eq!(inside, rounded_right);
    }

    #[test]
    fn wrong_branch_collapses_when_it_has_weight() {
        let obs = DiagonalObservable::new(vec![0.0, 1.0]);
        let s = StateVector::normalized(vec![c(1.0), c(1.0)]).unwrap();
        let noise = NoiseModel::new(0.45, 0.0).unwrap();
        let mut rng = SeededRng::new(5);
        let mut saw_failure = false;
        for _ in 0..200 {
            let m = measure_diagonal_noisy(&s, &obs, noise, &mut rng).unwrap();
            let collapsed_to = m
                .post_state
                .support()
                .map(|i| obs.eigenvalue(i).unwrap())
                .collect::<Vec<_>>();
            assert_eq!(collapsed_to, vec![m.outcome]);
            saw_failure |= !m.faithful;
        }
        assert!(saw_failure);
    }

    #[test]
    fn nearest_other_and_round() {
        let obs = DiagonalObservable::new(vec![0.0, 1.0, 3.0, 1.0]);
        assert_eq!(obs.nearest_other(1.0), Some(0.0));
        assert_eq!(obs.nearest_other(3.0), Some(1.0));
        assert_eq!(
            DiagonalObservable::constant(3, 1.0).nearest_other(1.0),
            None
        );
        assert_eq!(obs.round(2.2), Some(3.0));
        assert_eq!(obs.round(0.5), Some(0.0));
    }
}
