//! Fixed-length bit rows over the universe and a bit-sliced column counter.

use std::fmt;

use crate::universe::STRUCTURE_COUNT;

/// `u64` words per universe row.
pub const ROW_WORDS: usize = STRUCTURE_COUNT.div_ceil(64);

/// Bytes per universe row when packed to a byte boundary.
pub const ROW_BYTES: usize = STRUCTURE_COUNT.div_ceil(8);

const TAIL_BITS: usize = STRUCTURE_COUNT % 64;
const TAIL_MASK: u64 = if TAIL_BITS == 0 { !0 } else { (1u64 << TAIL_BITS) - 1 };

/// One bit per structure, LSB-first within each word, structure index ascending.
/// Padding bits past [`STRUCTURE_COUNT`] are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    words: Box<[u64]>,
}

impl BitRow {
    pub fn zeros() -> Self {
        BitRow { words: vec![0; ROW_WORDS].into_boxed_slice() }
    }

    pub fn ones() -> Self {
        let mut row = BitRow { words: vec![!0; ROW_WORDS].into_boxed_slice() };
        row.clear_padding();
        row
    }

    pub fn from_words(words: &[u64]) -> Self {
        assert_eq!(words.len(), ROW_WORDS, "row must have {ROW_WORDS} words");
        let mut row = BitRow { words: words.into() };
        row.clear_padding();
        row
    }

    pub fn from_fn(mut f: impl FnMut(usize) -> bool) -> Self {
        let mut row = BitRow::zeros();
        for i in 0..STRUCTURE_COUNT {
            if f(i) {
                row.set(i, true);
            }
        }
        row
    }

    fn clear_padding(&mut self) {
        self.words[ROW_WORDS - 1] &= TAIL_MASK;
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        get_bit(&self.words, i)
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < STRUCTURE_COUNT);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        popcount(&self.words)
    }

    pub fn and(&self, other: &BitRow) -> BitRow {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BitRow) -> BitRow {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &BitRow) -> BitRow {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn not(&self) -> BitRow {
        let mut row = BitRow { words: self.words.iter().map(|w| !w).collect() };
        row.clear_padding();
        row
    }

    /// `true` when every bit set here is also set in `other`.
    pub fn is_subset_of(&self, other: &BitRow) -> bool {
        self.words.iter().zip(other.words.iter()).all(|(a, b)| a & !b == 0)
    }

    /// Smallest index where the rows differ.
    pub fn first_difference(&self, other: &BitRow) -> Option<usize> {
        first_difference(&self.words, &other.words)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        iter_ones(&self.words)
    }

    fn zip_with(&self, other: &BitRow, f: impl Fn(u64, u64) -> u64) -> BitRow {
        BitRow { words: self.words.iter().zip(other.words.iter()).map(|(&a, &b)| f(a, b)).collect() }
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitRow(weight={})", self.count_ones())
    }
}

#[inline]
pub(crate) fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

pub(crate) fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

pub(crate) fn first_difference(a: &[u64], b: &[u64]) -> Option<usize> {
    a.iter()
        .zip(b.iter())
        .enumerate()
        .find(|(_, (x, y))| x != y)
        .map(|(i, (x, y))| i * 64 + (x ^ y).trailing_zeros() as usize)
}

pub(crate) fn iter_ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut rest = w;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * 64 + bit)
            }
        })
    })
}

/// Per-column counters stored as bit planes: adding a row costs a few word
/// operations per word regardless of how many bits it has set.
#[derive(Clone)]
pub struct ColumnCounter {
    planes: Vec<Vec<u64>>,
    words: usize,
    added: usize,
}

impl ColumnCounter {
    pub fn new(words: usize) -> Self {
        ColumnCounter { planes: Vec::new(), words, added: 0 }
    }

    pub fn add(&mut self, row: &[u64]) {
        debug_assert_eq!(row.len(), self.words);
        self.added += 1;
        let needed = usize::BITS as usize - self.added.leading_zeros() as usize;
        while self.planes.len() < needed {
            self.planes.push(vec![0; self.words]);
        }
        for (w, &bits) in row.iter().enumerate() {
            let mut carry = bits;
            for plane in self.planes.iter_mut() {
                if carry == 0 {
                    break;
                }
                let next = plane[w] & carry;
                plane[w] ^= carry;
                carry = next;
            }
        }
    }

    /// Adds `a XOR b` without materializing it.
    pub fn add_xor(&mut self, a: &[u64], b: &[u64]) {
        let diff: Vec<u64> = a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect();
        self.add(&diff);
    }

    pub fn rows_added(&self) -> usize {
        self.added
    }

    pub fn count(&self, column: usize) -> usize {
        let (w, bit) = (column / 64, column % 64);
        self.planes
            .iter()
            .enumerate()
            .map(|(p, plane)| ((plane[w] >> bit & 1) as usize) << p)
            .sum()
    }

    /// All counts for the first `columns` columns.
    pub fn counts(&self, columns: usize) -> Vec<u32> {
        let mut out = vec![0u32; columns];
        for (p, plane) in self.planes.iter().enumerate() {
            for i in iter_ones(plane) {
                if i < columns {
                    out[i] += 1 << p;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_stays_clear() {
        assert_eq!(ROW_WORDS, 1839);
        assert_eq!(ROW_BYTES, 14_707);
        assert_eq!(BitRow::ones().count_ones(), STRUCTURE_COUNT);
        assert_eq!(BitRow::zeros().not().count_ones(), STRUCTURE_COUNT);
        assert_eq!(BitRow::from_words(&vec![!0; ROW_WORDS]).count_ones(), STRUCTURE_COUNT);
    }

    #[test]
    fn set_get_and_difference() {
        let mut a = BitRow::zeros();
        a.set(5, true);
        a.set(STRUCTURE_COUNT - 1, true);
        assert!(a.get(5) && a.get(STRUCTURE_COUNT - 1) && !a.get(6));
        let b = BitRow::zeros();
        assert_eq!(a.first_difference(&b), Some(5));
        assert_eq!(a.first_difference(&a), None);
        assert_eq!(a.iter_ones().collect::<Vec<_>>(), vec![5, STRUCTURE_COUNT - 1]);
        assert!(b.is_subset_of(&a));
        assert!(!a.is_subset_of(&b));
    }

    #[test]
    fn column_counter_matches_naive_sum() {
        let rows: Vec<Vec<u64>> = (0..37u64)
            .map(|r| (0..3u64).map(|w| r.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(w as u32 * 7 + r as u32)).collect())
            .collect();
        let mut counter = ColumnCounter::new(3);
        for row in &rows {
            counter.add(row);
        }
        let counts = counter.counts(192);
        for (col, &count) in counts.iter().enumerate() {
            let naive = rows.iter().filter(|r| get_bit(r, col)).count();
            assert_eq!(count as usize, naive);
            assert_eq!(counter.count(col), naive);
        }
    }
}
