use std::fmt;

use crate::error::{Error, Result};
use crate::subset::{SubsetCode, MAX_DOMAIN};

/// A permutation of `{0, .., N-1}`, stored as its image list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    images: Vec<u8>,
}

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm { images: (0..n as u8).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Perm> {
        let n = images.len();
        if n > MAX_DOMAIN {
            return Err(Error::DomainTooLarge(n));
        }
        let mut seen = 0u64;
        for &i in &images {
            if i >= n || seen >> i & 1 == 1 {
                return Err(Error::NotAPermutation(format!("{images:?}")));
            }
            seen |= 1 << i;
        }
        Ok(Perm { images: images.into_iter().map(|i| i as u8).collect() })
    }

    /// Builds a permutation of degree `n` from disjoint cycles.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Perm> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut touched = 0u64;
        for cyc in cycles {
            for (k, &x) in cyc.iter().enumerate() {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, size: n });
                }
                if touched >> x & 1 == 1 {
                    return Err(Error::NotAPermutation(format!("point {x} repeated in cycles")));
                }
                touched |= 1 << x;
                images[x] = cyc[(k + 1) % cyc.len()];
            }
        }
        Perm::from_images(images)
    }

    /// Parses cycle notation such as `"(0 1 2)(3 4)"`; `"()"` is the identity.
    pub fn parse_cycles(n: usize, s: &str) -> Result<Perm> {
        let s = s.trim();
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let open = rest.strip_prefix('(').ok_or_else(|| Error::Parse(format!("expected '(' in {s:?}")))?;
            let close = open.find(')').ok_or_else(|| Error::Parse(format!("unclosed cycle in {s:?}")))?;
            let body = &open[..close];
            let cyc = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad point {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if !cyc.is_empty() {
                cycles.push(cyc);
            }
            rest = open[close + 1..].trim_start();
        }
        let refs: Vec<&[usize]> = cycles.iter().map(|c| c.as_slice()).collect();
        Perm::from_cycles(n, &refs)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.images[x] as usize
    }

    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i as usize).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), other.degree());
        Perm { images: other.images.iter().map(|&x| self.images[x as usize]).collect() }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u8; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Perm { images: inv }
    }

    /// `x ∘ self ∘ x⁻¹`.
    pub fn conjugate_by(&self, x: &Perm) -> Perm {
        let mut out = vec![0u8; self.degree()];
        for i in 0..self.degree() {
            out[x.images[i] as usize] = x.images[self.images[i] as usize];
        }
        Perm { images: out }
    }

    pub fn apply_subset(&self, s: SubsetCode) -> SubsetCode {
        let mut out = 0u64;
        for i in s.iter() {
            out |= 1 << self.images[i];
        }
        SubsetCode(out)
    }

    pub fn fixes_point(&self, x: usize) -> bool {
        self.images[x] as usize == x
    }

    /// Non-trivial cycles in canonical order (each starts at its least point).
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut x = self.apply(start);
            while x != start {
                seen[x] = true;
                cyc.push(x);
                x = self.apply(x);
            }
            if cyc.len() > 1 {
                out.push(cyc);
            }
        }
        out
    }

    /// Cycle lengths including fixed points, sorted descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                len += 1;
                x = self.apply(x);
            }
            out.push(len);
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    pub fn order(&self) -> usize {
        self.cycle_type().into_iter().fold(1, lcm)
    }

    pub fn pow(&self, k: usize) -> Perm {
        let mut out = Perm::identity(self.degree());
        for _ in 0..k {
            out = self.compose(&out);
        }
        out
    }

    /// Extends to a larger degree by fixing the new points.
    pub fn extend_to(&self, n: usize) -> Perm {
        let mut images = self.images.clone();
        images.extend(self.degree() as u8..n as u8);
        Perm { images }
    }

    /// Lexicographic rank among all permutations of the same degree (degree ≤ 12).
    pub fn rank(&self) -> usize {
        let n = self.degree();
        let mut used = 0u64;
        let mut r = 0usize;
        for i in 0..n {
            let x = self.images[i] as u64;
            let smaller_unused = (x as usize) - (used & ((1u64 << x) - 1)).count_ones() as usize;
            r = r * (n - i) + smaller_unused;
            used |= 1 << x;
        }
        r
    }

    pub fn unrank(n: usize, mut r: usize) -> Perm {
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            let base = n - i;
            digits[i] = r % base;
            r /= base;
        }
        let mut avail: Vec<u8> = (0..n as u8).collect();
        let images = digits.into_iter().map(|d| avail.remove(d)).collect();
        Perm { images }
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("()");
        }
        for c in cycles {
            f.write_str("(")?;
            for (k, x) in c.iter().enumerate() {
                if k > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_notation_round_trip() {
        let p = Perm::parse_cycles(6, "(0 1 2)(3 4)").unwrap();
        assert_eq!(p.to_string(), "(0 1 2)(3 4)");
        assert_eq!(p.cycle_type(), vec![3, 2, 1]);
        assert_eq!(p.order(), 6);
        assert_eq!(Perm::parse_cycles(3, "()").unwrap(), Perm::identity(3));
        assert_eq!(Perm::identity(4).to_string(), "()");
        assert!(Perm::parse_cycles(3, "(0 1)(1 2)").is_err());
        assert!(Perm::parse_cycles(3, "(0 3)").is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let p = Perm::parse_cycles(4, "(0 1 2 3)").unwrap();
        let q = Perm::parse_cycles(4, "(0 1)").unwrap();
        // p∘q sends 0 -> q -> 1 -> p -> 2
        assert_eq!(p.compose(&q).apply(0), 2);
        assert!(p.compose(&p.inverse()).is_identity());
        assert_eq!(p.pow(4), Perm::identity(4));
        let c = q.conjugate_by(&p);
        assert_eq!(c, p.compose(&q).compose(&p.inverse()));
    }

    #[test]
    fn rank_unrank() {
        for r in 0..120 {
            assert_eq!(Perm::unrank(5, r).rank(), r);
        }
        assert_eq!(Perm::identity(5).rank(), 0);
    }

    #[test]
    fn subset_action() {
        let p = Perm::parse_cycles(4, "(0 1 2 3)").unwrap();
        let s: SubsetCode = "0,1".parse().unwrap();
        assert_eq!(p.apply_subset(s).to_string(), "1,2");
    }
}
