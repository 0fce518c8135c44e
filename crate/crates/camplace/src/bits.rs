//! Packed bit vector used for voxel occupancy and visibility rows.

/// Fixed-length bit vector packed into u64 words, bit `i` at word `i / 64`,
/// position `i % 64` (LSB-first).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            words: vec![0u64; len.div_ceil(64)],
            len,
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
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
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

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// Indices of set bits in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    /// Packed little-endian bytes, LSB-first within each byte, padded to a
    /// whole byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = vec![0u8; n];
        for (i, b) in out.iter_mut().enumerate() {
            *b = (self.words[i / 8] >> ((i % 8) * 8)) as u8;
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut v = BitVec::zeros(len);
        for (i, &b) in bytes.iter().enumerate() {
            v.words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        // padding bits past `len` must be zero
        if !len.is_multiple_of(8) {
            let last = bytes[bytes.len() - 1];
            if last >> (len % 8) != 0 {
                return None;
            }
        }
        Some(v)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_count() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert!(v.get(0) && v.get(64) && v.get(129));
        assert!(!v.get(1));
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
    }

    #[test]
    fn byte_round_trip() {
        let mut v = BitVec::zeros(13);
        for i in [0, 3, 8, 12] {
            v.set(i, true);
        }
        let bytes = v.to_bytes();
        assert_eq!(bytes.len(), 2);
        assert_eq!(BitVec::from_bytes(&bytes, 13).unwrap(), v);
    }

    #[test]
    fn from_bytes_rejects_dirty_padding() {
        assert!(BitVec::from_bytes(&[0xff, 0xff], 13).is_none());
        assert!(BitVec::from_bytes(&[0xff], 13).is_none());
    }
}
