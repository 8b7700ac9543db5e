//! Fixed-length enumerative coding of binary sequences whose weight lies in a
//! typical shell `|k/n - p| <= epsilon1`.
//!
//! Sequences of weight `k` are ranked lexicographically (0 before 1), and the
//! shell index is `offset(k) + rank`. Codewords are `index + 1` so that the
//! all-zero codeword is free to signal escape.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{check_open_probability, check_positive, invalid, Result};

#[derive(Debug, Clone)]
pub struct SupportCoder {
    n: usize,
    k_lo: usize,
    /// `C(n, k)` for each shell weight, starting at `k_lo`.
    binom: Vec<BigUint>,
    /// Number of shell sequences with weight below `k`, same indexing.
    offsets: Vec<BigUint>,
    width: u64,
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for j in 0..k {
        c *= n - j;
        c /= j + 1;
    }
    c
}

fn in_shell(k: usize, n: usize, p: f64, epsilon1: f64) -> bool {
    (k as f64 / n as f64 - p).abs() <= epsilon1
}

impl SupportCoder {
    pub fn new(n: usize, p: f64, epsilon1: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", 0.0, "must be at least 1"));
        }
        check_open_probability("p", p)?;
        check_positive("epsilon1", epsilon1)?;

        let shell: Vec<usize> = (0..=n).filter(|&k| in_shell(k, n, p, epsilon1)).collect();
        let k_lo = shell.first().copied().unwrap_or(0);
        let mut binom = Vec::with_capacity(shell.len());
        let mut offsets = Vec::with_capacity(shell.len());
        let mut total = BigUint::zero();
        if let Some(&k_hi) = shell.last() {
            let mut c = binomial(n, k_lo);
            for k in k_lo..=k_hi {
                offsets.push(total.clone());
                total += &c;
                binom.push(c.clone());
                c = c * (n - k) / (k + 1);
            }
        }
        Ok(Self { n, k_lo, binom, offsets, width: total.bits() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Codeword width in bits: `ceil(log2(shell size + 1))`.
    pub fn width(&self) -> u64 {
        self.width
    }

    /// Inclusive weight range of the shell, or `None` when it is empty.
    pub fn weight_range(&self) -> Option<(usize, usize)> {
        (!self.binom.is_empty()).then(|| (self.k_lo, self.k_lo + self.binom.len() - 1))
    }

    pub fn is_typical_weight(&self, k: usize) -> bool {
        k >= self.k_lo && k - self.k_lo < self.binom.len()
    }

    /// `C(n - 1, k)` for a shell weight `k`.
    fn leading_count(&self, k: usize) -> BigUint {
        &self.binom[k - self.k_lo] * (self.n - k) / self.n
    }

    /// Lexicographic rank of `b` among weight-`k` sequences.
    pub fn rank(&self, b: &[bool]) -> Result<BigUint> {
        let k = self.weight_of(b)?;
        if !self.is_typical_weight(k) {
            return Err(invalid("weight", k as f64, "outside the typical shell"));
        }
        let mut rank = BigUint::zero();
        let mut r = k;
        // cur = C(m - 1, r), where m counts positions from i to the end.
        let mut cur = self.leading_count(k);
        for (i, &bit) in b.iter().enumerate() {
            let m = self.n - i;
            if bit {
                rank += &cur;
            }
            if m == 1 {
                break;
            }
            if bit {
                cur = cur * r / (m - 1);
                r -= 1;
            } else {
                cur = cur * (m - 1 - r) / (m - 1);
            }
        }
        Ok(rank)
    }

    pub fn unrank(&self, mut rank: BigUint, k: usize) -> Result<Vec<bool>> {
        if !self.is_typical_weight(k) {
            return Err(invalid("weight", k as f64, "outside the typical shell"));
        }
        if rank >= self.binom[k - self.k_lo] {
            return Err(invalid("rank", f64::NAN, "exceeds the number of weight-k sequences"));
        }
        let mut b = vec![false; self.n];
        let mut r = k;
        let mut cur = self.leading_count(k);
        for i in 0..self.n {
            let m = self.n - i;
            let bit = r > 0 && rank >= cur;
            if bit {
                rank -= &cur;
                b[i] = true;
            }
            if m == 1 {
                break;
            }
            if bit {
                cur = cur * r / (m - 1);
                r -= 1;
            } else {
                cur = cur * (m - 1 - r) / (m - 1);
            }
        }
        Ok(b)
    }

    /// Nonzero codeword for a typical `b`, `None` for an atypical one.
    pub fn encode(&self, b: &[bool]) -> Result<Option<BigUint>> {
        let k = self.weight_of(b)?;
        if !self.is_typical_weight(k) {
            return Ok(None);
        }
        Ok(Some(&self.offsets[k - self.k_lo] + self.rank(b)? + 1u32))
    }

    /// Inverse of [`encode`](Self::encode) for nonzero codewords.
    pub fn decode(&self, codeword: &BigUint) -> Result<Vec<bool>> {
        if codeword.is_zero() {
            return Err(invalid("codeword", 0.0, "zero is reserved for escape"));
        }
        let index = codeword - 1u32;
        // Last shell weight whose offset does not exceed the index.
        let slot = self.offsets.partition_point(|o| o <= &index);
        if slot == 0 || index >= &self.offsets[slot - 1] + &self.binom[slot - 1] {
            return Err(invalid("codeword", f64::NAN, "outside the shell"));
        }
        self.unrank(index - &self.offsets[slot - 1], self.k_lo + slot - 1)
    }

    fn weight_of(&self, b: &[bool]) -> Result<usize> {
        if b.len() != self.n {
            return Err(invalid("length", b.len() as f64, "does not match the coder block length"));
        }
        Ok(b.iter().filter(|&&x| x).count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_sequences(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u32..1 << n).map(move |m| (0..n).map(|i| m >> (n - 1 - i) & 1 == 1).collect())
    }

    #[test]
    fn ranks_weight_two_of_four_exhaustively() {
        let coder = SupportCoder::new(4, 0.5, 0.01).unwrap();
        assert_eq!(coder.weight_range(), Some((2, 2)));
        let mut seen = Vec::new();
        for b in all_sequences(4).filter(|b| b.iter().filter(|&&x| x).count() == 2) {
            let r = coder.rank(&b).unwrap();
            assert!(r < BigUint::from(6u32));
            assert_eq!(coder.unrank(r.clone(), 2).unwrap(), b);
            seen.push(r);
        }
        // Lexicographic order of the enumeration matches rank order.
        assert_eq!(seen, (0u32..6).map(BigUint::from).collect::<Vec<_>>());
    }

    #[test]
    fn shell_round_trip_exhaustive() {
        let coder = SupportCoder::new(10, 0.3, 0.15).unwrap();
        let mut codewords = Vec::new();
        for b in all_sequences(10) {
            match coder.encode(&b).unwrap() {
                Some(c) => {
                    assert!(c.bits() <= coder.width());
                    assert_eq!(coder.decode(&c).unwrap(), b);
                    codewords.push(c);
                }
                None => assert!(!coder.is_typical_weight(b.iter().filter(|&&x| x).count())),
            }
        }
        codewords.sort();
        codewords.dedup();
        let total: BigUint = (2..=4).map(|k| binomial(10, k)).sum();
        assert_eq!(BigUint::from(codewords.len()), total);
    }

    #[test]
    fn all_zero_escapes() {
        let coder = SupportCoder::new(50, 0.5, 0.05).unwrap();
        assert_eq!(coder.encode(&[false; 50]).unwrap(), None);
        assert!(coder.decode(&BigUint::zero()).is_err());
    }

    #[test]
    fn widths_match_exact_shell_sizes() {
        // Frozen from exact big-integer evaluation of the shell sums.
        let c = SupportCoder::new(1000, 0.1, 0.02).unwrap();
        assert_eq!(c.weight_range(), Some((81, 120)));
        assert_eq!(c.width(), 525);
        let c = SupportCoder::new(20, 0.25, 0.1).unwrap();
        assert_eq!((c.weight_range(), c.width()), (Some((3, 7)), 18));
        let eps = 3.5 * (0.1f64 * 0.9 / 1e4).sqrt();
        let c = SupportCoder::new(10_000, 0.1, eps).unwrap();
        assert_eq!((c.weight_range(), c.width()), (Some((896, 1105)), 5009));
    }

    #[test]
    fn empty_shell_has_zero_width() {
        let c = SupportCoder::new(3, 0.5, 0.1).unwrap();
        assert_eq!(c.weight_range(), None);
        assert_eq!(c.width(), 0);
        assert_eq!(c.encode(&[true, false, false]).unwrap(), None);
    }
}
