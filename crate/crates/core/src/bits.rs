/// Fixed-length bit vector backed by 64-bit words; bit `i` lives in word
/// `i / 64` at position `i % 64`. Unused high bits of the last word are zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPlane {
    words: Vec<u64>,
    len: usize,
}

impl BitPlane {
    pub fn zeros(len: usize) -> Self {
        BitPlane {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut p = BitPlane {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        p.clear_tail();
        p
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut p = BitPlane::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                p.set(i, true);
            }
        }
        p
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where `self` and `other` hold the same bit.
    pub fn count_agreements(&self, other: &BitPlane) -> usize {
        assert_eq!(self.len, other.len, "plane length mismatch");
        let diff: usize = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum();
        self.len - diff
    }

    /// Number of positions where both bits are set.
    pub fn count_both(&self, other: &BitPlane) -> usize {
        assert_eq!(self.len, other.len, "plane length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Packs the bits LSB-first, 8 per byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        self.words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(n)
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= u64::from(b) << (8 * (i % 8));
        }
        let mut p = BitPlane { words, len };
        let before = p.words.last().copied();
        p.clear_tail();
        // Padding bits must be zero for the encoding to be canonical.
        (p.words.last().copied() == before).then_some(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_and_counts() {
        let p = BitPlane::ones(70);
        assert_eq!(p.count_ones(), 70);
        assert_eq!(p.count_agreements(&BitPlane::zeros(70)), 0);
        assert_eq!(p.count_agreements(&p), 70);
    }

    #[test]
    fn set_get_roundtrip() {
        let bits = [true, false, true, true, false, false, false, true, true];
        let p = BitPlane::from_bools(&bits);
        assert_eq!(p.to_bools(), bits);
        assert_eq!(p.to_bytes(), vec![0b1000_1101, 0b1]);
        assert_eq!(BitPlane::from_bytes(&p.to_bytes(), 9).unwrap(), p);
    }

    #[test]
    fn nonzero_padding_rejected() {
        assert!(BitPlane::from_bytes(&[0, 0b10], 9).is_none());
        assert!(BitPlane::from_bytes(&[0], 9).is_none());
    }
}
