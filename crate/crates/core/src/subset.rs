use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported domain.
pub const MAX_DOMAIN: usize = 64;

/// A subset of `{0, .., N-1}` with `N <= 64`, stored as a characteristic vector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SubsetCode(pub u64);

impl SubsetCode {
    pub const EMPTY: SubsetCode = SubsetCode(0);

    /// The full domain `{0, .., n-1}`.
    pub fn full(n: usize) -> SubsetCode {
        assert!(n <= MAX_DOMAIN);
        if n == 64 {
            SubsetCode(u64::MAX)
        } else {
            SubsetCode((1u64 << n) - 1)
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Result<SubsetCode> {
        let mut bits = 0u64;
        for i in it {
            if i >= MAX_DOMAIN {
                return Err(Error::IndexOutOfRange { index: i, size: MAX_DOMAIN });
            }
            bits |= 1 << i;
        }
        Ok(SubsetCode(bits))
    }

    pub fn singleton(i: usize) -> SubsetCode {
        SubsetCode(1 << i)
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    #[inline]
    pub fn union(self, other: SubsetCode) -> SubsetCode {
        SubsetCode(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: SubsetCode) -> SubsetCode {
        SubsetCode(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: SubsetCode) -> SubsetCode {
        SubsetCode(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: SubsetCode) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest element + 1, or 0 for the empty set.
    pub fn span(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> SubsetIter {
        SubsetIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `self`, in increasing order of their codes.
    pub fn subsets(self) -> impl Iterator<Item = SubsetCode> {
        let mask = self.0;
        let mut cur = Some(0u64);
        std::iter::from_fn(move || {
            let c = cur?;
            cur = if c == mask { None } else { Some(((c | !mask).wrapping_add(1)) & mask) };
            Some(SubsetCode(c))
        })
    }

    /// All `k`-element subsets of `self`, in increasing code order.
    pub fn k_subsets(self, k: usize) -> impl Iterator<Item = SubsetCode> {
        self.subsets().filter(move |s| s.len() == k)
    }

    /// Lexicographic comparison of the increasing index lists.
    pub fn lex_cmp(self, other: SubsetCode) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

pub struct SubsetIter(u64);

impl Iterator for SubsetIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

impl fmt::Display for SubsetCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SubsetCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for SubsetCode {
    type Err = Error;

    /// Parses a strictly increasing comma-separated index list; the empty string is `∅`.
    fn from_str(s: &str) -> Result<SubsetCode> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(SubsetCode::EMPTY);
        }
        let mut prev: Option<usize> = None;
        let mut out = SubsetCode::EMPTY;
        for tok in s.split(',') {
            let i: usize = tok.trim().parse().map_err(|_| Error::Parse(format!("bad index {tok:?}")))?;
            if i >= MAX_DOMAIN {
                return Err(Error::IndexOutOfRange { index: i, size: MAX_DOMAIN });
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(Error::Parse(format!("indices not strictly increasing in {s:?}")));
            }
            prev = Some(i);
            out.insert(i);
        }
        Ok(out)
    }
}

impl serde::Serialize for SubsetCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.len()))?;
        for i in self.iter() {
            seq.serialize_element(&i)?;
        }
        seq.end()
    }
}

impl<'de> serde::Deserialize<'de> for SubsetCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<usize> = Vec::deserialize(d)?;
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(serde::de::Error::custom("subset indices must be strictly increasing"));
        }
        SubsetCode::from_indices(v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse() {
        let s: SubsetCode = "0,2,5".parse().unwrap();
        assert_eq!(s.to_string(), "0,2,5");
        assert_eq!(s.len(), 3);
        assert!("2,1".parse::<SubsetCode>().is_err());
        assert!("64".parse::<SubsetCode>().is_err());
        assert_eq!("".parse::<SubsetCode>().unwrap(), SubsetCode::EMPTY);
    }

    #[test]
    fn subsets_enumeration() {
        let s = SubsetCode::full(4);
        assert_eq!(s.subsets().count(), 16);
        assert_eq!(s.k_subsets(2).count(), 6);
        let t: SubsetCode = "1,3".parse().unwrap();
        assert_eq!(t.subsets().collect::<Vec<_>>().len(), 4);
        assert_eq!(SubsetCode::full(64).len(), 64);
    }

    #[test]
    fn lex_order() {
        let a: SubsetCode = "0,3".parse().unwrap();
        let b: SubsetCode = "1,2".parse().unwrap();
        assert_eq!(a.lex_cmp(b), std::cmp::Ordering::Less);
    }
}
