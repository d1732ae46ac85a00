//! Fixed-length bit strings and the r-contiguous matching rule.
//!
//! Two strings of equal length `l` match under the r-contiguous rule when they
//! agree on `r` consecutive positions at the same offset. Two variants are
//! provided: [`r_contiguous_match`] stops at the first qualifying run, and
//! [`all_match_spans`] reports every maximal agreement run of length `>= r`,
//! which is what per-gene usage accounting needs.
//!
//! Bit 0 is the leftmost character of the canonical text rendering.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// An immutable, fixed-length sequence of bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    /// All-zero string of `len` bits.
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Contract("bit string length must be positive".into()));
        }
        Ok(BitString {
            len,
            words: vec![0; len.div_ceil(WORD)],
        })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut s = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set_raw(i);
            }
        }
        Ok(s)
    }

    /// String of `len` bits with the given positions set.
    pub fn with_ones(len: usize, ones: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::zeros(len)?;
        for i in ones {
            if i >= len {
                return Err(Error::Contract(format!("bit index {i} out of range for length {len}")));
            }
            s.set_raw(i);
        }
        Ok(s)
    }

    /// Uniform random string: every bit an independent fair coin.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::zeros(len)?;
        for w in s.words.iter_mut() {
            *w = rng.random();
        }
        s.clear_tail();
        Ok(s)
    }

    /// Concatenation in argument order.
    pub fn concat(parts: &[BitString]) -> Result<Self> {
        let len = parts.iter().map(|p| p.len).sum();
        let mut out = Self::zeros(len)?;
        let mut offset = 0;
        for p in parts {
            for i in p.ones() {
                out.set_raw(offset + i);
            }
            offset += p.len;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Copy of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitString> {
        if start + len > self.len {
            return Err(Error::Contract(format!(
                "slice [{start}, {}) exceeds length {}",
                start + len,
                self.len
            )));
        }
        let mut out = Self::zeros(len)?;
        for i in 0..len {
            if self.get(start + i) {
                out.set_raw(i);
            }
        }
        Ok(out)
    }

    fn set_raw(&mut self, i: usize) {
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    /// Bit `i` of the result is 1 where `self` and `other` agree, for the
    /// 64 positions starting at `pos`. Positions past the end read as 0.
    fn agreement_at(&self, other: &BitString, pos: usize) -> u64 {
        let w = pos / WORD;
        let sh = pos % WORD;
        let agree = |k: usize| -> u64 {
            if k < self.words.len() {
                !(self.words[k] ^ other.words[k])
            } else {
                0
            }
        };
        let mut bits = agree(w) >> sh;
        if sh != 0 {
            bits |= agree(w + 1) << (WORD - sh);
        }
        let remaining = self.len - pos;
        if remaining < WORD {
            bits &= (1u64 << remaining) - 1;
        }
        bits
    }

    /// Maximal runs of agreeing positions, left to right, as `(start, len)`.
    fn agreement_runs<'a>(&'a self, other: &'a BitString) -> AgreementRuns<'a> {
        AgreementRuns {
            a: self,
            b: other,
            pos: 0,
        }
    }
}

struct AgreementRuns<'a> {
    a: &'a BitString,
    b: &'a BitString,
    pos: usize,
}

impl Iterator for AgreementRuns<'_> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        let len = self.a.len;
        // skip disagreements
        while self.pos < len {
            let bits = self.a.agreement_at(self.b, self.pos);
            let zeros = (bits.trailing_zeros() as usize).min(len - self.pos);
            self.pos += zeros;
            if zeros < WORD {
                break;
            }
        }
        if self.pos >= len {
            return None;
        }
        let start = self.pos;
        while self.pos < len {
            let bits = self.a.agreement_at(self.b, self.pos);
            let ones = (bits.trailing_ones() as usize).min(len - self.pos);
            self.pos += ones;
            if ones < WORD {
                break;
            }
        }
        Some((start, self.pos - start))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

/// A maximal agreement run of length at least `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatchSpan {
    pub position: usize,
    pub length: usize,
}

impl MatchSpan {
    pub fn end(&self) -> usize {
        self.position + self.length
    }
}

fn check_args(a: &BitString, b: &BitString, r: usize) -> Result<()> {
    if a.len != b.len {
        return Err(Error::Contract(format!(
            "length mismatch: {} vs {}",
            a.len, b.len
        )));
    }
    if r == 0 || r > a.len {
        return Err(Error::Contract(format!(
            "r = {r} outside [1, {}]",
            a.len
        )));
    }
    Ok(())
}

/// True iff `a` and `b` agree on some `r` consecutive positions.
/// Stops at the first qualifying run.
pub fn r_contiguous_match(a: &BitString, b: &BitString, r: usize) -> Result<bool> {
    check_args(a, b, r)?;
    Ok(matches_unchecked(a, b, r))
}

/// Hot-path variant for callers that have already validated lengths and `r`.
pub(crate) fn matches_unchecked(a: &BitString, b: &BitString, r: usize) -> bool {
    a.agreement_runs(b).any(|(_, len)| len >= r)
}

/// Length of the longest agreement run between two equal-length strings.
#[cfg(test)]
pub(crate) fn longest_agreement(a: &BitString, b: &BitString) -> usize {
    a.agreement_runs(b).map(|(_, len)| len).max().unwrap_or(0)
}

/// Every maximal agreement run of length `>= r`, left to right.
pub fn all_match_spans(a: &BitString, b: &BitString, r: usize) -> Result<Vec<MatchSpan>> {
    check_args(a, b, r)?;
    Ok(a.agreement_runs(b)
        .filter(|&(_, len)| len >= r)
        .map(|(position, length)| MatchSpan { position, length })
        .collect())
}

/// Indices of the fixed-width fields a span overlaps.
pub fn genes_touched(span: MatchSpan, gene_width: usize) -> BTreeSet<usize> {
    assert!(gene_width > 0 && span.length > 0);
    let first = span.position / gene_width;
    let last = (span.position + span.length - 1) / gene_width;
    (first..=last).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn worked_examples() {
        assert!(r_contiguous_match(&bs("10110"), &bs("10101"), 3).unwrap());
        assert!(!r_contiguous_match(&bs("10110"), &bs("10101"), 4).unwrap());
        assert!(!r_contiguous_match(&bs("0000"), &bs("1111"), 1).unwrap());
        let a = bs("110100111");
        assert!(r_contiguous_match(&a, &a, a.len()).unwrap());
    }

    #[test]
    fn spans_example() {
        let spans = all_match_spans(&bs("111000111111"), &bs("111111111111"), 3).unwrap();
        assert_eq!(
            spans,
            vec![
                MatchSpan { position: 0, length: 3 },
                MatchSpan { position: 6, length: 6 }
            ]
        );
        let a = bs("0110");
        assert_eq!(
            all_match_spans(&a, &a, 2).unwrap(),
            vec![MatchSpan { position: 0, length: 4 }]
        );
        assert!(all_match_spans(&bs("0101"), &bs("1010"), 1).unwrap().is_empty());
    }

    #[test]
    fn contract_violations() {
        assert!(r_contiguous_match(&bs("01"), &bs("011"), 1).is_err());
        assert!(r_contiguous_match(&bs("01"), &bs("01"), 0).is_err());
        assert!(r_contiguous_match(&bs("01"), &bs("01"), 3).is_err());
        assert!(all_match_spans(&bs("01"), &bs("011"), 1).is_err());
        assert!(BitString::zeros(0).is_err());
        assert!("01x".parse::<BitString>().is_err());
    }

    #[test]
    fn genes_touched_examples() {
        let g = |p, l| genes_touched(MatchSpan { position: p, length: l }, 10);
        assert_eq!(g(8, 10), BTreeSet::from([0, 1]));
        assert_eq!(g(0, 10), BTreeSet::from([0]));
        assert_eq!(g(0, 50), BTreeSet::from([0, 1, 2, 3, 4]));
    }

    #[test]
    fn runs_cross_word_boundaries() {
        let n = 150;
        let a = BitString::zeros(n).unwrap();
        let b = BitString::with_ones(n, [10, 100]).unwrap();
        let spans = all_match_spans(&a, &b, 1).unwrap();
        assert_eq!(
            spans,
            vec![
                MatchSpan { position: 0, length: 10 },
                MatchSpan { position: 11, length: 89 },
                MatchSpan { position: 101, length: 49 },
            ]
        );
        assert_eq!(longest_agreement(&a, &b), 89);
    }

    #[test]
    fn render_round_trip() {
        let s = "0100110001110000101";
        assert_eq!(bs(s).to_string(), s);
        assert_eq!(bs(s).count_ones(), 8);
        let c = BitString::concat(&[bs("01"), bs("110")]).unwrap();
        assert_eq!(c.to_string(), "01110");
        assert_eq!(c.slice(1, 3).unwrap().to_string(), "111");
    }
}
