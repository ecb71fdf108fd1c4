use num_complex::Complex64;

use super::{QuantumError, SeededRng, NORM_TOLERANCE};

/// Spin-½ state `a|↑⟩ + b|↓⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    a: Complex64,
    b: Complex64,
}

impl Qubit {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self, QuantumError> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized { norm });
        }
        Ok(Qubit { a, b })
    }

    pub fn up() -> Self {
        Qubit {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn down() -> Self {
        Qubit {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(1.0, 0.0),
        }
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.a, self.b)
    }

    /// Probability of reading `σ_z = +1`.
    pub fn prob_up(&self) -> f64 {
        self.a.norm_sqr()
    }

    pub fn apply(&self, m: &[[Complex64; 2]; 2]) -> Self {
        Qubit {
            a: m[0][0] * self.a + m[0][1] * self.b,
            b: m[1][0] * self.a + m[1][1] * self.b,
        }
    }
}

/// `exp(-iωσ_y) = cos ω · I - i sin ω · σ_y = [[cos ω, -sin ω], [sin ω, cos ω]]`.
pub fn rotation_matrix(omega: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = omega.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// `exp(-iωσ_y)|↑⟩ = cos ω |↑⟩ + sin ω |↓⟩`.
pub fn rotate_qubit(omega: f64) -> Qubit {
    Qubit::up().apply(&rotation_matrix(omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> i8 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

/// One `σ_z` reading; one uniform draw.
pub fn measure_sigma_z(q: &Qubit, rng: &mut SeededRng) -> Spin {
    if rng.uniform() < q.prob_up() {
        Spin::Up
    } else {
        Spin::Down
    }
}
