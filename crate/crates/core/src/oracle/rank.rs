use super::{HaltingSurrogate, OracleError};
use crate::machine::ProgramIndex;

/// Rank bookkeeping for the interleaving map over a finite prefix of
/// halting bits.
///
/// The map sends the m-th index (counting from 1) whose bit is 0 to `2m - 2`
/// and the m-th index whose bit is 1 to `2m - 1`, so the parity of an image
/// is the halting bit of its preimage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    bits: Vec<bool>,
    /// `ones_upto[x]` = number of ones among indices `0..=x`.
    ones_upto: Vec<u64>,
    zeros: Vec<ProgramIndex>,
    ones: Vec<ProgramIndex>,
}

impl RankTable {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut ones_upto = Vec::with_capacity(bits.len());
        let mut zeros = Vec::new();
        let mut ones = Vec::new();
        for (x, &b) in bits.iter().enumerate() {
            if b {
                ones.push(x as u64);
            } else {
                zeros.push(x as u64);
            }
            ones_upto.push(ones.len() as u64);
        }
        RankTable {
            bits: bits.to_vec(),
            ones_upto,
            zeros,
            ones,
        }
    }

    pub fn from_surrogate(surrogate: &HaltingSurrogate) -> Self {
        Self::from_bits(&surrogate.bits())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn check(&self, x: ProgramIndex) -> Result<usize, OracleError> {
        usize::try_from(x)
            .ok()
            .filter(|&i| i < self.bits.len())
            .ok_or(OracleError::TableTooShort {
                index: x,
                len: self.bits.len() as u64,
            })
    }

    /// `(m₀(x), m₁(x))`: zeros and ones among indices `0..=x`.
    pub fn counts(&self, x: ProgramIndex) -> Result<(u64, u64), OracleError> {
        let i = self.check(x)?;
        let ones = self.ones_upto[i];
        Ok((x + 1 - ones, ones))
    }

    /// Image of `x` under the interleaving map.
    pub fn image(&self, x: ProgramIndex) -> Result<u64, OracleError> {
        let i = self.check(x)?;
        let (zeros, ones) = self.counts(x)?;
        Ok(if self.bits[i] {
            2 * ones - 1
        } else {
            2 * zeros - 2
        })
    }

    /// Preimage of `y`, provided the table has seen enough indices of the
    /// matching class.
    pub fn preimage(&self, y: u64) -> Result<ProgramIndex, OracleError> {
        let (class, rank) = if y.is_multiple_of(2) {
            (&self.zeros, y / 2)
        } else {
            (&self.ones, (y - 1) / 2)
        };
        usize::try_from(rank)
            .ok()
            .and_then(|r| class.get(r))
            .copied()
            .ok_or(OracleError::PreimageOutsidePrefix { image: y })
    }

    /// `(x, image(x))` for every index in the prefix.
    pub fn pairs(&self) -> impl Iterator<Item = (ProgramIndex, u64)> + '_ {
        (0..self.bits.len() as u64).map(|x| (x, self.image(x).expect("index in prefix")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn images(bits: &[bool]) -> Vec<u64> {
        let t = RankTable::from_bits(bits);
        (0..bits.len() as u64)
            .map(|x| t.image(x).unwrap())
            .collect()
    }

    #[test]
    fn mixed_prefix() {
        assert_eq!(images(&[true, false, false, true]), vec![1, 0, 2, 3]);
    }

    #[test]
    fn all_zero_prefix() {
        assert_eq!(images(&[false, false, false]), vec![0, 2, 4]);
    }

    #[test]
    fn preimages() {
        let t = RankTable::from_bits(&[true, false, false, true]);
        assert_eq!(t.preimage(0), Ok(1));
        assert_eq!(t.preimage(3), Ok(3));
        assert_eq!(t.preimage(1), Ok(0));
        assert_eq!(t.preimage(2), Ok(2));
        assert_eq!(
            t.preimage(4),
            Err(OracleError::PreimageOutsidePrefix { image: 4 })
        );
        assert_eq!(
            t.preimage(5),
            Err(OracleError::PreimageOutsidePrefix { image: 5 })
        );
    }

    #[test]
    fn short_table() {
        let t = RankTable::from_bits(&[true]);
        assert_eq!(
            t.image(1),
            Err(OracleError::TableTooShort { index: 1, len: 1 })
        );
        assert!(RankTable::from_bits(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn rank_laws(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
            let t = RankTable::from_bits(&bits);
            let mut evens = BTreeSet::new();
            let mut odds = BTreeSet::new();
            for x in 0..bits.len() as u64 {
                let (z, o) = t.counts(x).unwrap();
                prop_assert_eq!(z + o, x + 1);
                let y = t.image(x).unwrap();
                prop_assert_eq!(y % 2 == 1, bits[x as usize]);
                prop_assert_eq!(t.preimage(y).unwrap(), x);
                if y.is_multiple_of(2) { evens.insert(y); } else { odds.insert(y); }
            }
            let (m0, m1) = t.counts(bits.len() as u64 - 1).unwrap();
            prop_assert_eq!(evens, (0..m0).map(|m| 2 * m).collect::<BTreeSet<_>>());
            prop_assert_eq!(odds, (0..m1).map(|m| 2 * m + 1).collect::<BTreeSet<_>>());
        }

        #[test]
        fn refinement_only_moves_later_images(
            bits in proptest::collection::vec(any::<bool>(), 1..200),
            flips in proptest::collection::vec(any::<prop::sample::Index>(), 0..5),
        ) {
            // Refinement can only turn zeros into ones.
            let mut refined = bits.clone();
            for f in &flips {
                refined[f.index(bits.len())] = true;
            }
            let first_flip = bits.iter().zip(&refined).position(|(a, b)| a != b);
            let before = images(&bits);
            let after = images(&refined);
            for x in 0..bits.len() {
                if first_flip.is_none_or(|f| x < f) {
                    prop_assert_eq!(before[x], after[x]);
                }
            }
        }
    }
}
