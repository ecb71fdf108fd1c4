use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};

use super::OracleError;

/// Exact value `numerator / 2^width` in `[0, 1)`.
///
/// Bit `i` (with `i = 0` the most significant fractional bit, weight `2^-(i+1)`)
/// is numerator bit `width - 1 - i`. Two values compare by value, not by
/// representation, so `1/2` at width 1 equals `2/4` at width 2.
#[derive(Debug, Clone)]
pub struct DyadicRational {
    numerator: BigUint,
    width: u64,
}

impl DyadicRational {
    pub fn new(numerator: BigUint, width: u64) -> Result<Self, OracleError> {
        if numerator.bits() > width {
            return Err(OracleError::OutOfUnitInterval(format!(
                "{numerator}/2^{width}"
            )));
        }
        Ok(DyadicRational { numerator, width })
    }

    pub fn zero() -> Self {
        DyadicRational {
            numerator: BigUint::zero(),
            width: 0,
        }
    }

    /// `Σ bits[i] · 2^-(i+1)`, width `bits.len()`.
    pub fn from_bits(bits: &[bool]) -> Self {
        let width = bits.len() as u64;
        let mut numerator = BigUint::zero();
        for (i, &b) in bits.iter().enumerate() {
            if b {
                numerator.set_bit(width - 1 - i as u64, true);
            }
        }
        DyadicRational { numerator, width }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Fractional bit `i`; zero past the stored width.
    pub fn bit(&self, i: u64) -> bool {
        i < self.width && self.numerator.bit(self.width - 1 - i)
    }

    /// The first `n` fractional bits.
    pub fn bits(&self, n: usize) -> Vec<bool> {
        (0..n as u64).map(|i| self.bit(i)).collect()
    }

    /// `f64` approximation (the top 64 significant bits, then one rounding).
    pub fn to_f64(&self) -> f64 {
        if self.numerator.is_zero() {
            return 0.0;
        }
        // Keep the top 64 significant bits so the conversion stays in range
        // for arbitrarily wide values.
        let excess = self.numerator.bits().saturating_sub(64);
        let top = (&self.numerator >> excess).to_u64().expect("64-bit window");
        let shift = self.width as i64 - excess as i64;
        top as f64 * 2f64.powi(-(shift.min(i32::MAX as i64) as i32))
    }

    /// `self + offset`, exact. Every finite `f64` is a dyadic rational, so no
    /// rounding happens. The sum must stay strictly inside `(0, 1)`.
    pub fn perturbed(&self, offset: f64) -> Result<Self, OracleError> {
        let (off_num, off_width) = exact_dyadic(offset)
            .ok_or_else(|| OracleError::OutOfUnitInterval(format!("non-finite offset {offset}")))?;
        let width = self.width.max(off_width);
        let lhs = BigInt::from(self.numerator.clone()) << (width - self.width);
        let rhs = off_num << (width - off_width);
        let sum = lhs + rhs;
        let limit = BigInt::from(1u8) << width;
        if sum.sign() != Sign::Plus || sum >= limit {
            return Err(OracleError::OutOfUnitInterval(format!(
                "{} {:+e} leaves (0, 1)",
                self, offset
            )));
        }
        Ok(DyadicRational {
            numerator: sum.to_biguint().expect("positive"),
            width,
        })
    }

    fn aligned(&self, other: &Self) -> (BigUint, BigUint) {
        let width = self.width.max(other.width);
        (
            &self.numerator << (width - self.width),
            &other.numerator << (width - other.width),
        )
    }
}

/// Exact signed dyadic form `(m, w)` with `value = m / 2^w`, `w >= 0`.
fn exact_dyadic(v: f64) -> Option<(BigInt, u64)> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some((BigInt::zero(), 0));
    }
    let bits = v.to_bits();
    let negative = bits >> 63 == 1;
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mantissa, mut exp) = if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    };
    let tz = mantissa.trailing_zeros() as i64;
    mantissa >>= tz;
    exp += tz;
    let mut m = BigInt::from(mantissa);
    let width = if exp >= 0 {
        m <<= exp as u64;
        0
    } else {
        (-exp) as u64
    };
    if negative {
        m = -m;
    }
    Some((m, width))
}

impl PartialEq for DyadicRational {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DyadicRational {}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.aligned(other);
        a.cmp(&b)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Lowest terms.
        let shift = self
            .numerator
            .trailing_zeros()
            .unwrap_or(self.width)
            .min(self.width);
        write!(f, "{}/2^{}", &self.numerator >> shift, self.width - shift)
    }
}
