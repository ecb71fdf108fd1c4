use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::oracle::DyadicRational;
use crate::quantum::{measure_sigma_z, rotate_qubit, SeededRng, Spin};

/// Largest bit count for which cell boundaries `j · 2^-n` are exact in `f64`.
pub const MAX_EXTRACTED_BITS: usize = 52;

/// How the `N` rounds of rotate-then-measure are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One `σ_z` measurement per round, one uniform draw each.
    PerShot,
    /// The success count of all rounds drawn at once from the exact binomial
    /// law of `N` independent rounds. Same distribution, constant time.
    Aggregate,
}

/// `(p̂, Ω̂)` from `N` spin readings, with a Hoeffding interval on `p̂`
/// mapped through the decreasing map `p ↦ arccos(√p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub shots: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub omega_hat: f64,
    /// Image of the upper end of the `p̂` interval.
    pub lower: f64,
    /// Image of the lower end of the `p̂` interval.
    pub upper: f64,
    /// Half-width of the symmetric interval `Ω̂ ± radius` enclosing `[lower, upper]`.
    pub radius: f64,
    pub confidence: f64,
}

impl OmegaEstimate {
    pub fn interval(&self) -> (f64, f64) {
        (self.omega_hat - self.radius, self.omega_hat + self.radius)
    }

    pub fn covers(&self, value: f64) -> bool {
        let (lo, hi) = self.interval();
        lo <= value && value <= hi
    }
}

/// Two-sided Hoeffding half-width for a mean of `n` draws in `[0, 1]`.
pub fn hoeffding_half_width(n: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

fn angle_of(p: f64) -> f64 {
    p.clamp(0.0, 1.0).sqrt().acos()
}

/// Estimate of the rotation angle `angle` in `exp(-i·angle·σ_y)` from spin-up
/// frequencies. `angle` is assumed to lie in `[0, π/2]`, where `cos` is
/// nonnegative and `arccos(√p)` is the only consistent branch.
pub fn estimate_angle(
    angle: f64,
    shots: u64,
    confidence: f64,
    sampling: Sampling,
    rng: &mut SeededRng,
) -> Result<OmegaEstimate, ProtocolError> {
    if shots == 0 {
        return Err(ProtocolError::InvalidParameter(
            "shot count must be at least 1".into(),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(ProtocolError::InvalidParameter(format!(
            "confidence {confidence} not in (0, 1)"
        )));
    }
    let qubit = rotate_qubit(angle);
    let successes = match sampling {
        Sampling::PerShot => (0..shots)
            .filter(|_| measure_sigma_z(&qubit, rng) == Spin::Up)
            .count() as u64,
        Sampling::Aggregate => rng.binomial(shots, qubit.prob_up()),
    };
    let p_hat = successes as f64 / shots as f64;
    let t = hoeffding_half_width(shots, confidence);
    let omega_hat = angle_of(p_hat);
    let lower = angle_of(p_hat + t);
    let upper = angle_of(p_hat - t);
    let radius = (omega_hat - lower).max(upper - omega_hat);
    Ok(OmegaEstimate {
        shots,
        successes,
        p_hat,
        omega_hat,
        lower,
        upper,
        radius,
        confidence,
    })
}

/// Runs the rotation protocol with the exact constant as the angle.
pub fn estimate_omega(
    omega_true: &DyadicRational,
    shots: u64,
    confidence: f64,
    sampling: Sampling,
    rng: &mut SeededRng,
) -> Result<OmegaEstimate, ProtocolError> {
    if omega_true.is_zero() {
        return Err(ProtocolError::InvalidParameter(
            "omega must lie strictly inside (0, 1)".into(),
        ));
    }
    estimate_angle(omega_true.to_f64(), shots, confidence, sampling, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitExtraction {
    /// First `n` bits of `Ω̂`, clamped into `[0, 1)`.
    pub bits: Vec<bool>,
    /// The interval `Ω̂ ± radius` lies strictly inside one cell
    /// `(j·2^-n, (j+1)·2^-n)`.
    pub certified: bool,
    /// Distance from the interval to the nearer cell boundary; negative when
    /// the interval crosses it.
    pub guard: f64,
    pub truth_bits: Vec<bool>,
    pub matches_truth: bool,
}

pub fn extract_bits(
    estimate: &OmegaEstimate,
    n: usize,
    omega_true: &DyadicRational,
) -> Result<BitExtraction, ProtocolError> {
    if n == 0 || n > MAX_EXTRACTED_BITS {
        return Err(ProtocolError::InvalidParameter(format!(
            "bit count {n} not in 1..={MAX_EXTRACTED_BITS}"
        )));
    }
    let cells = 1u64 << n;
    let scale = cells as f64;
    let j = if estimate.omega_hat.is_nan() || estimate.omega_hat <= 0.0 {
        0
    } else {
        ((estimate.omega_hat * scale).floor() as u64).min(cells - 1)
    };
    let bits: Vec<bool> = (0..n).map(|i| (j >> (n - 1 - i)) & 1 == 1).collect();
    let (lo, hi) = estimate.interval();
    let cell_lo = j as f64 / scale;
    let cell_hi = (j + 1) as f64 / scale;
    let guard = (lo - cell_lo).min(cell_hi - hi);
    let certified = cell_lo < lo && hi < cell_hi;
    let truth_bits = omega_true.bits(n);
    Ok(BitExtraction {
        matches_truth: bits == truth_bits,
        bits,
        certified,
        guard,
        truth_bits,
    })
}

/// Positions where `a` and `b` differ.
fn differing(a: &[bool], b: &[bool]) -> Vec<usize> {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactPerturbation {
    pub eta: f64,
    /// Exact perturbed value as `numerator/2^width`.
    pub perturbed: String,
    /// Indices `≤ n` where the perturbed expansion differs from the true one.
    pub corrupted: Vec<usize>,
}

/// Exact comparison of the first `n + 1` bits of `Ω` and `Ω + η` for each
/// `η`. No sampling. Offsets that leave `(0, 1)` are rejected.
pub fn exact_perturbation(
    omega_true: &DyadicRational,
    n: usize,
    etas: &[f64],
) -> Result<Vec<ExactPerturbation>, ProtocolError> {
    let truth = omega_true.bits(n + 1);
    etas.iter()
        .map(|&eta| {
            let shifted = omega_true.perturbed(eta)?;
            Ok(ExactPerturbation {
                eta,
                perturbed: shifted.to_string(),
                corrupted: differing(&truth, &shifted.bits(n + 1)),
            })
        })
        .collect()
}

/// Offsets `±2^-j` for `j = 1..=n+3` that keep `Ω + η` inside `(0, 1)`,
/// ordered by magnitude and then sign.
pub fn witness_grid(omega_true: &DyadicRational, n: usize) -> Vec<f64> {
    let mut etas = Vec::new();
    for j in (1..=n as i32 + 3).rev() {
        for sign in [-1.0, 1.0] {
            let eta = sign * 2f64.powi(-j);
            if omega_true.perturbed(eta).is_ok() {
                etas.push(eta);
            }
        }
    }
    etas
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationEntry {
    pub eta: f64,
    pub exact: ExactPerturbation,
    /// Estimate obtained when the implemented dynamics rotates by `Ω + η`.
    pub estimate: OmegaEstimate,
    /// Extraction of `n + 1` bits from that estimate, judged against the
    /// unperturbed `Ω`.
    pub extraction: BitExtraction,
    pub sampled_corrupted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub bit_index: usize,
    pub entries: Vec<PerturbationEntry>,
    /// Smallest `|η|` whose exact expansion differs from `Ω` at some index `≤ n`.
    pub smallest_corrupting: Option<f64>,
    /// Smallest `|η|` whose exact expansion differs at index `n` itself.
    pub smallest_corrupting_bit: Option<f64>,
    /// Smallest `|η|` whose certified sampled extraction differs from `Ω`.
    pub smallest_certified_corrupting: Option<f64>,
}

fn smallest_abs(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.map(f64::abs).min_by(f64::total_cmp)
}

/// For each `η`, runs the rotation protocol with angle `Ω + η` while the
/// reference expansion stays at `Ω`, and records which of bits `0..=n` come
/// out wrong, both exactly and as sampled.
pub fn perturbation_sweep(
    omega_true: &DyadicRational,
    n: usize,
    etas: &[f64],
    shots: u64,
    confidence: f64,
    sampling: Sampling,
    rng: &mut SeededRng,
) -> Result<PerturbationReport, ProtocolError> {
    if n + 1 > MAX_EXTRACTED_BITS {
        return Err(ProtocolError::InvalidParameter(format!(
            "bit index {n} too large"
        )));
    }
    let exact = exact_perturbation(omega_true, n, etas)?;
    let mut entries = Vec::with_capacity(etas.len());
    for ex in exact {
        let angle = omega_true.perturbed(ex.eta)?.to_f64();
        let estimate = estimate_angle(angle, shots, confidence, sampling, rng)?;
        let extraction = extract_bits(&estimate, n + 1, omega_true)?;
        let sampled_corrupted = differing(&extraction.truth_bits, &extraction.bits);
        entries.push(PerturbationEntry {
            eta: ex.eta,
            exact: ex,
            estimate,
            extraction,
            sampled_corrupted,
        });
    }
    Ok(PerturbationReport {
        bit_index: n,
        smallest_corrupting: smallest_abs(
            entries
                .iter()
                .filter(|e| !e.exact.corrupted.is_empty())
                .map(|e| e.eta),
        ),
        smallest_corrupting_bit: smallest_abs(
            entries
                .iter()
                .filter(|e| e.exact.corrupted.contains(&n))
                .map(|e| e.eta),
        ),
        smallest_certified_corrupting: smallest_abs(
            entries
                .iter()
                .filter(|e| e.extraction.certified && !e.sampled_corrupted.is_empty())
                .map(|e| e.eta),
        ),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use std::f64::consts::FRAC_PI_2;

    fn five_eighths() -> DyadicRational {
        DyadicRational::new(BigUint::from(5u8), 3).unwrap()
    }

    fn fixed(omega_hat: f64, radius: f64) -> OmegaEstimate {
        OmegaEstimate {
            shots: 1,
            successes: 0,
            p_hat: 0.0,
            omega_hat,
            lower: omega_hat - radius,
            upper: omega_hat + radius,
            radius,
            confidence: 0.95,
        }
    }

    #[test]
    fn hoeffding_width() {
        let t = hoeffding_half_width(10_000, 0.95);
        assert!((t - (40f64.ln() / 20_000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn certified_cell() {
        let e = extract_bits(&fixed(0.75, 0.01), 1, &five_eighths()).unwrap();
        assert_eq!(e.bits, vec![true]);
        assert!(e.certified);
        assert!((e.guard - 0.24).abs() < 1e-12);
        assert!(e.matches_truth);
    }

    #[test]
    fn straddling_interval_is_not_certified() {
        let e = extract_bits(&fixed(0.5, 0.01), 1, &five_eighths()).unwrap();
        assert!(!e.certified);
        assert!(e.guard < 0.0);
    }

    #[test]
    fn touching_a_boundary_is_not_certified() {
        let e = extract_bits(&fixed(0.625, 0.125), 2, &five_eighths()).unwrap();
        assert_eq!(e.guard, 0.0);
        assert!(!e.certified);
    }

    #[test]
    fn bit_count_limits() {
        assert!(extract_bits(&fixed(0.5, 0.1), 0, &five_eighths()).is_err());
        assert!(extract_bits(&fixed(0.5, 0.1), 53, &five_eighths()).is_err());
        let e = extract_bits(&fixed(1.3, 0.1), 3, &five_eighths()).unwrap();
        assert_eq!(e.bits, vec![true, true, true]);
        assert!(!e.certified);
    }

    #[test]
    fn single_shot_is_uninformative() {
        for seed in 0..50 {
            let est = estimate_omega(
                &five_eighths(),
                1,
                0.95,
                Sampling::PerShot,
                &mut SeededRng::new(seed),
            )
            .unwrap();
            assert!(est.radius >= FRAC_PI_2);
            for n in 1..8 {
                assert!(!extract_bits(&est, n, &five_eighths()).unwrap().certified);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = SeededRng::new(0);
        assert!(estimate_omega(&five_eighths(), 0, 0.95, Sampling::PerShot, &mut rng).is_err());
        assert!(estimate_omega(&five_eighths(), 10, 1.0, Sampling::PerShot, &mut rng).is_err());
        assert!(estimate_omega(
            &DyadicRational::zero(),
            10,
            0.9,
            Sampling::PerShot,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn small_omega_is_localized() {
        // Only bit 6 set: Ω = 2^-7.
        let mut bits = vec![false; 13];
        bits[6] = true;
        let omega = DyadicRational::from_bits(&bits);
        let est = estimate_omega(
            &omega,
            100_000,
            0.95,
            Sampling::PerShot,
            &mut SeededRng::new(5),
        )
        .unwrap();
        assert!(est.covers(omega.to_f64()));
        assert!((est.p_hat - omega.to_f64().cos().powi(2)).abs() < 0.01);
    }

    #[test]
    fn sampling_modes_agree_in_distribution() {
        let omega = five_eighths();
        let p = omega.to_f64().cos().powi(2);
        for sampling in [Sampling::PerShot, Sampling::Aggregate] {
            let mut rng = SeededRng::new(31);
            let n = 200_000;
            let est = estimate_omega(&omega, n, 0.95, sampling, &mut rng).unwrap();
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((est.p_hat - p).abs() < 5.0 * sd, "{sampling:?}");
        }
    }

    #[test]
    fn escalating_shots_certify_three_bits() {
        // 0.10101: 1/32 inside the cell (5/8, 6/8).
        let omega = DyadicRational::new(BigUint::from(21u8), 5).unwrap();
        let mut certified_at = None;
        for exp in 10..=24 {
            let shots = 1u64 << exp;
            let est = estimate_omega(
                &omega,
                shots,
                0.95,
                Sampling::Aggregate,
                &mut SeededRng::new(exp),
            )
            .unwrap();
            let e = extract_bits(&est, 3, &omega).unwrap();
            if e.certified {
                assert_eq!(e.bits, vec![true, false, true]);
                certified_at = Some(shots);
                break;
            }
        }
        assert!(certified_at.is_some());
    }

    #[test]
    fn exact_perturbation_example() {
        let r = exact_perturbation(&five_eighths(), 2, &[0.0, 0.125]).unwrap();
        assert!(r[0].corrupted.is_empty());
        assert_eq!(r[1].corrupted, vec![1, 2]);
        assert_eq!(r[1].perturbed, "3/2^2");
        assert!(exact_perturbation(&five_eighths(), 2, &[0.5]).is_err());
    }

    #[test]
    fn witness_grid_stays_inside() {
        let omega = five_eighths();
        let grid = witness_grid(&omega, 3);
        assert!(!grid.is_empty());
        for eta in &grid {
            assert!(omega.perturbed(*eta).is_ok());
        }
        assert!(!grid.contains(&0.5));
        assert!(!grid.contains(&-0.625));
        assert!(grid.windows(2).all(|w| w[0].abs() <= w[1].abs()));
    }

    #[test]
    fn sweep_reports_smallest_corrupting_offset() {
        let omega = five_eighths();
        let etas = witness_grid(&omega, 2);
        let r = perturbation_sweep(
            &omega,
            2,
            &etas,
            1 << 22,
            0.95,
            Sampling::Aggregate,
            &mut SeededRng::new(8),
        )
        .unwrap();
        // 5/8 - 1/32 = 0.10011: the borrow already flips bit 2.
        assert_eq!(r.smallest_corrupting, Some(0.03125));
        assert_eq!(r.smallest_corrupting_bit, Some(0.03125));
        let plus_eighth = r.entries.iter().find(|e| e.eta == 0.125).unwrap();
        assert_eq!(plus_eighth.exact.corrupted, vec![1, 2]);
        for e in &r.entries {
            if e.extraction.certified {
                assert_eq!(e.extraction.bits, omega.perturbed(e.eta).unwrap().bits(3));
            }
        }
    }

    #[test]
    fn zero_offset_corrupts_nothing() {
        let omega = five_eighths();
        let r = perturbation_sweep(
            &omega,
            2,
            &[0.0],
            1 << 20,
            0.95,
            Sampling::Aggregate,
            &mut SeededRng::new(2),
        )
        .unwrap();
        assert!(r.entries[0].exact.corrupted.is_empty());
        assert_eq!(r.smallest_corrupting, None);
        let e = &r.entries[0];
        if e.extraction.certified {
            assert!(e.sampled_corrupted.is_empty());
        }
    }
}
