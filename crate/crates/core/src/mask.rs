//! Ground sets and fixed-width subset masks.

use std::fmt;

/// A finite ground set `{0, .., n-1}` with optional element labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "ground set must contain at least one element");
        Self { n, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        assert!(!labels.is_empty(), "ground set must contain at least one element");
        Self {
            n: labels.len(),
            labels: Some(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn empty_mask(&self) -> SubsetMask {
        SubsetMask::empty(self.n)
    }

    pub fn full_mask(&self) -> SubsetMask {
        SubsetMask::full(self.n)
    }
}

const WORD: usize = 64;

/// Membership indicator over a ground set of `len` elements, stored as 64-bit words.
///
/// Iteration is always in ascending index order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    words: Vec<u64>,
    len: usize,
}

impl SubsetMask {
    pub fn empty(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Self::empty(len);
        for w in m.words.iter_mut() {
            *w = u64::MAX;
        }
        m.trim();
        m
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(len);
        for i in indices {
            m.insert(i);
        }
        m
    }

    /// Mask whose element `i` is set iff bit `i` of `bits` is set (`len <= 64`).
    pub fn from_bits(len: usize, bits: u64) -> Self {
        assert!(len <= WORD);
        let mut m = Self::empty(len);
        if len > 0 {
            m.words[0] = bits;
            m.trim();
        }
        m
    }

    pub fn from_bools(flags: &[bool]) -> Self {
        Self::from_indices(
            flags.len(),
            flags.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i),
        )
    }

    /// The low 64 bits; exact when `len <= 64`.
    pub fn to_bits(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    fn trim(&mut self) {
        let rem = self.len % WORD;
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
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "index {i} out of range for mask of length {}", self.len);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "index {i} out of range for mask of length {}", self.len);
        self.words[i / WORD] &= !(1 << (i % WORD));
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.len, "index {i} out of range for mask of length {}", self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        let mut m = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        m.trim();
        m
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.len, other.len, "mask length mismatch");
        Self {
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
            len: self.len,
        }
    }

    /// Element indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + b)
                }
            })
        })
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.contains(i)).collect()
    }

    /// Sum of `values[i]` over members.
    pub fn sum_of(&self, values: &[f64]) -> f64 {
        self.iter().map(|i| values[i]).sum()
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = SubsetMask::from_indices(70, [0, 3, 65]);
        let b = SubsetMask::from_indices(70, [3, 4, 69]);
        assert_eq!(a.union(&b).to_indices(), vec![0, 3, 4, 65, 69]);
        assert_eq!(a.intersection(&b).to_indices(), vec![3]);
        assert_eq!(a.difference(&b).to_indices(), vec![0, 65]);
        assert_eq!(a.complement().count(), 67);
        assert!(SubsetMask::from_indices(70, [3]).is_subset(&a));
        assert!(!a.is_disjoint(&b));
    }

    #[test]
    fn full_mask_is_trimmed() {
        let m = SubsetMask::full(65);
        assert_eq!(m.count(), 65);
        assert!(m.is_full());
        assert!(m.complement().is_empty());
    }

    #[test]
    fn bits_round_trip() {
        let m = SubsetMask::from_bits(5, 0b10110);
        assert_eq!(m.to_indices(), vec![1, 2, 4]);
        assert_eq!(m.to_bits(), 0b10110);
        assert_eq!(SubsetMask::from_bits(3, 0xff).count(), 3);
    }
}
