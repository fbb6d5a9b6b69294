use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::subset::SubsetCode;

/// Largest domain for which a selection table is stored explicitly.
pub const MAX_TABLE_DOMAIN: usize = 20;

/// A finite model of the selection theory: every subset larger than the arity
/// is assigned an arity-sized subset of itself.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SelectionStructure {
    domain_size: usize,
    arity: usize,
    // indexed by subset code; EMPTY for subsets not larger than the arity
    table: Vec<SubsetCode>,
}

impl std::fmt::Debug for SelectionStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Sel(N={}, n={}; ", self.domain_size, self.arity)?;
        for (l, v) in self.entries() {
            write!(f, "[{l}]->[{v}] ")?;
        }
        f.write_str(")")
    }
}

impl SelectionStructure {
    /// Builds a structure from a rule, validating every entry.
    pub fn from_fn(domain_size: usize, arity: usize, mut rule: impl FnMut(SubsetCode) -> SubsetCode) -> Result<Self> {
        check_dims(domain_size, arity)?;
        let full = SubsetCode::full(domain_size);
        let mut table = vec![SubsetCode::EMPTY; 1 << domain_size];
        for l in full.subsets() {
            if l.len() > arity {
                let v = rule(l);
                if !v.is_subset_of(l) || v.len() != arity {
                    return Err(Error::Malformed(format!("Sel({{{l}}}) = {{{v}}} is not an {arity}-subset")));
                }
                table[l.0 as usize] = v;
            }
        }
        Ok(SelectionStructure { domain_size, arity, table })
    }

    /// Builds from explicit `(L, Sel(L))` pairs; the table must be total.
    pub fn from_entries(domain_size: usize, arity: usize, entries: &[(SubsetCode, SubsetCode)]) -> Result<Self> {
        check_dims(domain_size, arity)?;
        let mut table = vec![SubsetCode::EMPTY; 1 << domain_size];
        let full = SubsetCode::full(domain_size);
        for &(l, v) in entries {
            if !l.is_subset_of(full) || l.len() <= arity {
                return Err(Error::Malformed(format!("entry key {{{l}}} outside the table domain")));
            }
            if !table[l.0 as usize].is_empty() {
                return Err(Error::Malformed(format!("duplicate entry for {{{l}}}")));
            }
            table[l.0 as usize] = v;
        }
        SelectionStructure::from_fn(domain_size, arity, |l| table[l.0 as usize])
    }

    /// The structure selecting the lexicographically least `n`-subset everywhere.
    pub fn least(domain_size: usize, arity: usize) -> Result<Self> {
        SelectionStructure::from_fn(domain_size, arity, |l| lex_least_ksubset(l, arity))
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// `Sel(L)`, or `None` when `|L| <= n`.
    pub fn get(&self, l: SubsetCode) -> Option<SubsetCode> {
        let v = *self.table.get(l.0 as usize)?;
        (!v.is_empty()).then_some(v)
    }

    /// Table entries ordered by subset code.
    pub fn entries(&self) -> impl Iterator<Item = (SubsetCode, SubsetCode)> + '_ {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .map(|(l, &v)| (SubsetCode(l as u64), v))
    }

    pub fn len(&self) -> usize {
        self.entries().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `π·m`, the structure with `Sel'(π L) = π(Sel(L))`.
    pub fn relabel(&self, pi: &Perm) -> SelectionStructure {
        let mut table = vec![SubsetCode::EMPTY; self.table.len()];
        for (l, v) in self.entries() {
            table[pi.apply_subset(l).0 as usize] = pi.apply_subset(v);
        }
        SelectionStructure { domain_size: self.domain_size, arity: self.arity, table }
    }

    /// Whether `π(Sel(L)) = Sel(π L)` for every entry.
    pub fn is_preserved_by(&self, pi: &Perm) -> bool {
        self.entries().all(|(l, v)| self.table[pi.apply_subset(l).0 as usize] == pi.apply_subset(v))
    }

    /// Re-checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let full = SubsetCode::full(self.domain_size);
        for l in full.subsets() {
            let v = self.table[l.0 as usize];
            if l.len() > self.arity {
                if !v.is_subset_of(l) || v.len() != self.arity {
                    return Err(Error::Malformed(format!("bad entry at {{{l}}}")));
                }
            } else if !v.is_empty() {
                return Err(Error::Malformed(format!("unexpected entry at {{{l}}}")));
            }
        }
        Ok(())
    }

    /// Restriction to the subsets of `part`, renumbered onto `0..|part|`.
    pub fn induced(&self, part: SubsetCode) -> SelectionStructure {
        let pts = part.to_vec();
        let k = pts.len();
        let squash = |s: SubsetCode| {
            SubsetCode(pts.iter().enumerate().filter(|(_, &p)| s.contains(p)).fold(0, |acc, (i, _)| acc | 1 << i))
        };
        let expand = |s: SubsetCode| SubsetCode(s.iter().fold(0, |acc, i| acc | 1 << pts[i]));
        SelectionStructure::from_fn(k, self.arity, |l| squash(self.get(expand(l)).unwrap())).unwrap()
    }
}

fn check_dims(domain_size: usize, arity: usize) -> Result<()> {
    if arity == 0 {
        return Err(Error::Precondition("arity must be at least 1".into()));
    }
    if domain_size > MAX_TABLE_DOMAIN {
        return Err(Error::BoundExceeded(format!(
            "explicit selection tables are limited to {MAX_TABLE_DOMAIN} points"
        )));
    }
    Ok(())
}

/// Lexicographically least `k`-subset: the `k` smallest elements.
pub fn lex_least_ksubset(l: SubsetCode, k: usize) -> SubsetCode {
    SubsetCode::from_indices(l.iter().take(k)).unwrap()
}

/// Number of total structures on `domain_size` points, saturating.
pub fn count_structures(domain_size: usize, arity: usize) -> u128 {
    let mut total: u128 = 1;
    for m in arity + 1..=domain_size {
        let per = binom(m, arity) as u128;
        let count = binom(domain_size, m);
        for _ in 0..count {
            total = total.saturating_mul(per);
        }
    }
    total
}

pub fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

/// Guard for [`enumerate_structures`].
pub const MAX_ENUMERATION: u128 = 10_000_000;

/// Every total selection structure on `domain_size` points, each exactly once.
pub fn enumerate_structures(domain_size: usize, arity: usize) -> Result<impl Iterator<Item = SelectionStructure>> {
    check_dims(domain_size, arity)?;
    let count = count_structures(domain_size, arity);
    if count > MAX_ENUMERATION {
        return Err(Error::BoundExceeded(format!("{count} structures exceed the enumeration guard")));
    }
    let full = SubsetCode::full(domain_size);
    let keys: Vec<SubsetCode> = full.subsets().filter(|l| l.len() > arity).collect();
    let options: Vec<Vec<SubsetCode>> = keys.iter().map(|l| l.k_subsets(arity).collect()).collect();
    let mut digits = vec![0usize; keys.len()];
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        let mut table = vec![SubsetCode::EMPTY; 1 << domain_size];
        for (i, l) in keys.iter().enumerate() {
            table[l.0 as usize] = options[i][digits[i]];
        }
        // odometer step
        let mut i = 0;
        loop {
            if i == digits.len() {
                done = true;
                break;
            }
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        Some(SelectionStructure { domain_size, arity, table })
    }))
}
