//! Finite approximations of three permutation models and evaluators for
//! selection and choice principles on them.
//!
//! Every model splits its atoms into blocks and its group is the direct
//! product of per-block groups: a full cycle on each block (`vfin`, `vlines`)
//! or the symmetric group on one block holding every atom (`bfm`). A support
//! `E` is honored by dropping the generators that touch it, so a cyclic block
//! meeting `E` becomes pointwise fixed while a symmetric block only fixes the
//! atoms of `E`. Because the group is a product, the setwise stabilizer of a
//! set `L` acts block by block, and whether `L` has an invariant `k`-subset
//! depends only on the multiset of orbit sizes of `L ∩ B` over the blocks `B`.
//! The evaluators run dynamic programs over those per-block orbit profiles.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deciders::{Certificate, Claim, SelTable, VerdictKind};
use crate::error::{Error, Result};
use crate::group::{group_closure_with, ClosureLimits, PermGroup};
use crate::perm::Perm;
use crate::reductions::PartialSelection;
use crate::subset::{SubsetCode, MAX_DOMAIN};

/// Largest arity accepted by [`evaluate`].
pub const MAX_ZOO_N: usize = 16;
/// Supports looked at by one evaluation before giving up.
pub const MAX_SUPPORTS: usize = 200_000;
/// Largest group closed when building a certificate.
const CERT_ELEMENTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZooKind {
    Vfin,
    Bfm,
    Vlines,
}

impl FromStr for ZooKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ZooKind> {
        match s {
            "vfin" => Ok(ZooKind::Vfin),
            "bfm" => Ok(ZooKind::Bfm),
            "vlines" => Ok(ZooKind::Vlines),
            _ => Err(Error::Parse(format!("unknown model {s:?}"))),
        }
    }
}

impl fmt::Display for ZooKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZooKind::Vfin => "vfin",
            ZooKind::Bfm => "bfm",
            ZooKind::Vlines => "vlines",
        })
    }
}

/// Position of a block on a line, a rational `num / den`. Recorded for the
/// line models but never consulted by the finite evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineIndex {
    pub line: usize,
    pub num: i64,
    pub den: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub size: usize,
    pub line: Option<LineIndex>,
}

impl Block {
    pub fn atoms(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }

    fn code(&self) -> SubsetCode {
        SubsetCode(SubsetCode::full(self.size).0 << self.start)
    }
}

/// A model truncated to at most 64 atoms, with a support `E` fixed pointwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZooModel {
    pub name: ZooKind,
    pub blocks: Vec<Block>,
    pub atom_count: usize,
    pub support: SubsetCode,
}

/// The descriptor file: model fields plus the generators they induce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZooDescriptor {
    #[serde(flatten)]
    pub model: ZooModel,
    #[serde(default)]
    pub generators: Vec<String>,
}

fn first_primes(k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut c = 2;
    while out.len() < k {
        if (2..c).take_while(|d| d * d <= c).all(|d| c % d != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// `key=value` pairs separated by `;`, or one bare value stored under `key`.
fn parse_params(params: &str, key: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in params.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('=') {
            Some((k, v)) => out.insert(k.trim().to_string(), v.trim().to_string()),
            None => out.insert(key.to_string(), part.to_string()),
        };
    }
    Ok(out)
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("{what}: expected a non-negative integer, got {s:?}")))
}

/// Builds a model with at most `cap` atoms.
///
/// Parameters: `vfin` takes the number of blocks (`blocks=K` or `K`; default
/// as many as fit), `bfm` the number of atoms (`atoms=N` or `N`; default the
/// cap), `vlines` the block size of each line (`sizes=4,3` or `4,3`) and
/// optionally `per_line=K` (default as many as fit).
pub fn make_model(name: &str, params: &str, cap: usize, support: &[usize]) -> Result<ZooModel> {
    if cap > MAX_DOMAIN {
        return Err(Error::DomainTooLarge(cap));
    }
    let kind: ZooKind = name.parse()?;
    let mut blocks = Vec::new();
    match kind {
        ZooKind::Vfin => {
            let p = parse_params(params, "blocks")?;
            let sizes = match p.get("blocks") {
                Some(k) => {
                    let sizes = first_primes(parse_usize(k, "blocks")?);
                    let total: usize = sizes.iter().sum();
                    if total > cap {
                        return Err(Error::BoundExceeded(format!("{} prime blocks need {total} atoms, cap is {cap}", sizes.len())));
                    }
                    sizes
                }
                None => {
                    let mut sizes = Vec::new();
                    let mut total = 0;
                    for q in first_primes(18) {
                        if total + q > cap {
                            break;
                        }
                        total += q;
                        sizes.push(q);
                    }
                    sizes
                }
            };
            let mut start = 0;
            for s in sizes {
                blocks.push(Block { start, size: s, line: None });
                start += s;
            }
        }
        ZooKind::Bfm => {
            let p = parse_params(params, "atoms")?;
            let n = match p.get("atoms") {
                Some(v) => parse_usize(v, "atoms")?,
                None => cap,
            };
            if n > cap {
                return Err(Error::BoundExceeded(format!("{n} atoms exceed the cap {cap}")));
            }
            if n > 0 {
                blocks.push(Block { start: 0, size: n, line: None });
            }
        }
        ZooKind::Vlines => {
            let p = parse_params(params, "sizes")?;
            let sizes = p
                .get("sizes")
                .ok_or_else(|| Error::Parse("vlines needs sizes".into()))?
                .split(',')
                .map(|s| parse_usize(s.trim(), "sizes"))
                .collect::<Result<Vec<usize>>>()?;
            if sizes.iter().any(|&s| s == 0) {
                return Err(Error::Precondition("block sizes must be positive".into()));
            }
            let per_line_atoms: usize = sizes.iter().sum();
            let per_line = match p.get("per_line") {
                Some(v) => parse_usize(v, "per_line")?,
                None => cap / per_line_atoms.max(1),
            };
            if per_line == 0 || per_line * per_line_atoms > cap {
                return Err(Error::BoundExceeded(format!(
                    "{per_line} blocks per line of sizes {sizes:?} do not fit the cap {cap}"
                )));
            }
            let mut start = 0;
            for (line, &s) in sizes.iter().enumerate() {
                for i in 0..per_line {
                    let line = Some(LineIndex { line, num: i as i64, den: 1 });
                    blocks.push(Block { start, size: s, line });
                    start += s;
                }
            }
        }
    }
    let atom_count = blocks.iter().map(|b| b.size).sum();
    if atom_count == 0 {
        return Err(Error::Precondition("the model has no atoms".into()));
    }
    let support = SubsetCode::from_indices(support.iter().copied())?;
    if let Some(a) = support.iter().find(|&a| a >= atom_count) {
        return Err(Error::IndexOutOfRange { index: a, size: atom_count });
    }
    let model = ZooModel { name: kind, blocks, atom_count, support };
    model.validate()?;
    Ok(model)
}

impl ZooModel {
    /// Checks the shape rules of the model kind.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Malformed(m));
        if self.atom_count == 0 || self.atom_count > MAX_DOMAIN {
            return bad(format!("atom count {} outside 1..=64", self.atom_count));
        }
        let mut next = 0;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.start != next || b.size == 0 {
                return bad(format!("block {i} does not continue the atom range"));
            }
            next += b.size;
        }
        if next != self.atom_count {
            return bad("blocks do not cover the atoms".into());
        }
        if self.support.0 >> self.atom_count.min(63) > 0 && self.atom_count < 64 {
            return bad("support lies outside the atoms".into());
        }
        match self.name {
            ZooKind::Vfin => {
                let primes = first_primes(self.blocks.len());
                if self.blocks.iter().zip(&primes).any(|(b, &p)| b.size != p || b.line.is_some()) {
                    return bad("vfin blocks must have the consecutive prime sizes".into());
                }
            }
            ZooKind::Bfm => {
                if self.blocks.len() != 1 || self.blocks[0].line.is_some() {
                    return bad("bfm has one block".into());
                }
            }
            ZooKind::Vlines => {
                let mut seen: BTreeMap<usize, (usize, (i64, u64))> = BTreeMap::new();
                for (i, b) in self.blocks.iter().enumerate() {
                    let Some(l) = b.line else {
                        return bad(format!("block {i} has no line index"));
                    };
                    if l.den == 0 {
                        return bad(format!("block {i} has a zero denominator"));
                    }
                    if let Some(&(size, (num, den))) = seen.get(&l.line) {
                        if size != b.size {
                            return bad(format!("line {} mixes block sizes", l.line));
                        }
                        if (num as i128) * (l.den as i128) >= (l.num as i128) * (den as i128) {
                            return bad(format!("line {} positions are not increasing", l.line));
                        }
                    }
                    seen.insert(l.line, (b.size, (l.num, l.den)));
                }
            }
        }
        Ok(())
    }

    /// Class of a block: its line for `vlines`, a single class otherwise.
    pub fn class_of(&self, block: usize) -> usize {
        self.blocks[block].line.map_or(0, |l| l.line)
    }

    /// Blocks grouped by class, each in atom order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.blocks.len() {
            by.entry(self.class_of(i)).or_default().push(i);
        }
        by.into_values().collect()
    }

    fn symmetric(&self) -> bool {
        self.name == ZooKind::Bfm
    }

    /// Generators of `fix_G(E)`: generators touching the support are dropped.
    pub fn generators(&self) -> Vec<Perm> {
        let n = self.atom_count;
        let mut out = Vec::new();
        for b in &self.blocks {
            if self.symmetric() {
                let free: Vec<usize> = b.atoms().filter(|&a| !self.support.contains(a)).collect();
                for (i, &x) in free.iter().enumerate() {
                    for &y in &free[i + 1..] {
                        out.push(Perm::from_cycles(n, &[&[x, y]]).expect("transposition on the domain"));
                    }
                }
            } else if b.size > 1 && b.code().intersection(self.support).is_empty() {
                let cycle: Vec<usize> = b.atoms().collect();
                out.push(Perm::from_cycles(n, &[&cycle]).expect("block cycle on the domain"));
            }
        }
        out
    }

    /// The group itself, when it is small enough to list.
    pub fn group(&self) -> Result<PermGroup> {
        let limits = ClosureLimits { max_degree: MAX_DOMAIN, max_elements: CERT_ELEMENTS };
        group_closure_with(self.atom_count, &self.generators(), limits)
    }

    pub fn with_support(&self, support: SubsetCode) -> Result<ZooModel> {
        if let Some(a) = support.iter().find(|&a| a >= self.atom_count) {
            return Err(Error::IndexOutOfRange { index: a, size: self.atom_count });
        }
        Ok(ZooModel { support, ..self.clone() })
    }

    pub fn to_descriptor(&self) -> String {
        let d = ZooDescriptor {
            model: self.clone(),
            generators: self.generators().iter().map(|g| g.to_string()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&d).expect("descriptors serialize");
        s.push('\n');
        s
    }

    /// Parses a descriptor; listed generators must match the model's own.
    pub fn from_descriptor(text: &str) -> Result<ZooModel> {
        let d: ZooDescriptor = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        d.model.validate()?;
        if !d.generators.is_empty() {
            let own: Vec<String> = d.model.generators().iter().map(|g| g.to_string()).collect();
            if own != d.generators {
                return Err(Error::Malformed("generators do not match the blocks and support".into()));
            }
        }
        Ok(d.model)
    }
}

/// A principle with its arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "principle", content = "n", rename_all = "snake_case")]
pub enum ZooPrinciple {
    /// Selection of `n`-subsets from every finite set of more than `n` atoms of a class.
    NrcFin(usize),
    /// Choice on all `n`-sets of atoms.
    CN(usize),
    /// Selection on infinitely many members of designated families of sets larger than `n`.
    NcfinMinus(usize),
    /// Choice on the `n`-sets of each class.
    Rc(usize),
}

impl ZooPrinciple {
    pub fn parse(name: &str, n: usize) -> Result<ZooPrinciple> {
        match name {
            "nrc_fin" => Ok(ZooPrinciple::NrcFin(n)),
            "c_n" => Ok(ZooPrinciple::CN(n)),
            "ncfin_minus" => Ok(ZooPrinciple::NcfinMinus(n)),
            "rc" => Ok(ZooPrinciple::Rc(n)),
            _ => Err(Error::Parse(format!("unknown principle {name:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ZooPrinciple::NrcFin(_) => "nrc_fin",
            ZooPrinciple::CN(_) => "c_n",
            ZooPrinciple::NcfinMinus(_) => "ncfin_minus",
            ZooPrinciple::Rc(_) => "rc",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            ZooPrinciple::NrcFin(n) | ZooPrinciple::CN(n) | ZooPrinciple::NcfinMinus(n) | ZooPrinciple::Rc(n) => n,
        }
    }
}

impl fmt::Display for ZooPrinciple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.n())
    }
}

// ---------------------------------------------------------------------------
// Block views and orbit profiles

#[derive(Clone, Debug)]
enum Action {
    /// Every atom fixed.
    Trivial,
    /// A full cycle on the block.
    Cyclic,
    /// The first `fixed` atoms are fixed, the rest permuted arbitrarily.
    Sym { fixed: usize },
}

#[derive(Clone, Debug)]
struct View {
    block: usize,
    class: usize,
    atoms: Vec<u32>,
    action: Action,
}

/// How much of the model a view set covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Keep {
    All,
    /// First half of each class (the smaller of the two caps).
    Half,
}

fn views(model: &ZooModel, e: SubsetCode, keep: Keep) -> Vec<View> {
    let mut out = Vec::new();
    for class in model.classes() {
        let take = match keep {
            Keep::All => class.len(),
            Keep::Half => class.len().div_ceil(2),
        };
        for &bi in &class[..take] {
            let b = &model.blocks[bi];
            let class = model.class_of(bi);
            if model.symmetric() {
                let (fixed, free): (Vec<u32>, Vec<u32>) =
                    b.atoms().map(|a| a as u32).partition(|&a| e.contains(a as usize));
                let free_keep = match keep {
                    Keep::All => free.len(),
                    Keep::Half => (b.size / 2).saturating_sub(fixed.len()),
                };
                let nfixed = fixed.len();
                let atoms = fixed.into_iter().chain(free.into_iter().take(free_keep)).collect();
                out.push(View { block: bi, class, atoms, action: Action::Sym { fixed: nfixed } });
            } else {
                let touched = !b.code().intersection(e).is_empty();
                let action = if touched || b.size == 1 { Action::Trivial } else { Action::Cyclic };
                out.push(View { block: bi, class, atoms: b.atoms().map(|a| a as u32).collect(), action });
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Profile {
    orbits: Vec<usize>,
    count: u128,
    rep: Vec<u32>,
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

fn mobius(mut n: usize) -> i128 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// `j`-subsets of `Z_d` moved by every non-trivial rotation.
fn aperiodic(d: usize, j: usize) -> u128 {
    let mut total: i128 = 0;
    for e in divisors(d) {
        if (j * e) % d == 0 {
            total += mobius(d / e) * binom(e, j * e / d) as i128;
        }
    }
    total as u128
}

/// Every orbit profile of `T ⊆ block` under the setwise stabilizer of `T`,
/// with how many `T` have it and one representative. With `avoid_fixed`
/// only subsets missing the fixed atoms are listed.
fn profiles(v: &View, avoid_fixed: bool) -> Vec<Profile> {
    let b = v.atoms.len();
    let empty = Profile { orbits: Vec::new(), count: 1, rep: Vec::new() };
    match v.action {
        Action::Trivial => {
            if avoid_fixed {
                return vec![empty];
            }
            (0..=b)
                .map(|t| Profile { orbits: vec![1; t], count: binom(b, t), rep: v.atoms[..t].to_vec() })
                .collect()
        }
        Action::Cyclic => {
            // T has minimal period d: it is the lift of an aperiodic j-subset of Z_d
            // and splits into j orbits of size b/d
            let mut out = vec![empty];
            for d in divisors(b) {
                let js: Vec<usize> = if d == 1 { vec![1] } else { (1..d).collect() };
                for j in js {
                    let rep = (0..b).filter(|x| x % d < j).map(|x| v.atoms[x]).collect();
                    out.push(Profile { orbits: vec![b / d; j], count: aperiodic(d, j), rep });
                }
            }
            out
        }
        Action::Sym { fixed } => {
            let free = b - fixed;
            let mut out = Vec::new();
            let t1_max = if avoid_fixed { 0 } else { fixed };
            for t1 in 0..=t1_max {
                for t2 in 0..=free {
                    let mut orbits = vec![1; t1];
                    if t2 > 0 {
                        orbits.push(t2);
                    }
                    let rep = v.atoms[..t1].iter().chain(&v.atoms[fixed..fixed + t2]).copied().collect();
                    out.push(Profile { orbits, count: binom(fixed, t1) * binom(free, t2), rep });
                }
            }
            out
        }
    }
}

fn add_orbit(mask: u32, s: usize, full: u32) -> u32 {
    if s >= 32 {
        mask
    } else {
        (mask | mask << s) & full
    }
}

/// What a violating set looks like.
#[derive(Clone, Copy, Debug)]
enum Want {
    /// More than `n` atoms and no invariant `n`-subset.
    Sel,
    /// Exactly `s` atoms and no invariant `n`-subset.
    SelExact(usize),
    /// Exactly `n` atoms and no invariant point.
    Choice,
}

/// Smallest violating set over the views, least sums-mask first.
fn find_violation(vs: &[&View], n: usize, want: Want, avoid_fixed: bool) -> Option<Vec<u32>> {
    let full: u32 = if n + 1 >= 32 { u32::MAX } else { (1u32 << (n + 1)) - 1 };
    let limit = match want {
        Want::Sel => vs.iter().map(|v| v.atoms.len()).sum(),
        Want::SelExact(s) => s,
        Want::Choice => n,
    };
    type Key = (usize, u32);
    let mut layers: Vec<BTreeMap<Key, (Key, usize)>> = Vec::with_capacity(vs.len() + 1);
    let mut cur: BTreeMap<Key, (Key, usize)> = BTreeMap::new();
    cur.insert((0, 1), ((0, 1), usize::MAX));
    let all: Vec<Vec<Profile>> = vs.iter().map(|v| profiles(v, avoid_fixed)).collect();
    for ps in &all {
        let mut next: BTreeMap<Key, (Key, usize)> = BTreeMap::new();
        for &(total, mask) in cur.keys() {
            for (pi, p) in ps.iter().enumerate() {
                if matches!(want, Want::Choice) && p.orbits.contains(&1) {
                    continue;
                }
                let t = total + p.orbits.iter().sum::<usize>();
                if t > limit {
                    continue;
                }
                let m = p.orbits.iter().fold(mask, |m, &s| add_orbit(m, s, full));
                if !matches!(want, Want::Choice) && m >> n & 1 == 1 {
                    continue;
                }
                next.entry((t, m)).or_insert(((total, mask), pi));
            }
        }
        layers.push(std::mem::replace(&mut cur, next));
    }
    let accept = |&(t, _): &Key| match want {
        Want::Sel => t > n,
        Want::SelExact(s) => t == s,
        Want::Choice => t == n,
    };
    let mut key = *cur.keys().filter(|k| accept(k)).min()?;
    let mut out = Vec::new();
    let mut layer = cur;
    for i in (0..vs.len()).rev() {
        let (prev, pi) = layer[&key];
        out.extend_from_slice(&all[i][pi].rep);
        key = prev;
        layer = std::mem::take(&mut layers[i]);
    }
    out.sort_unstable();
    Some(out)
}

/// Number of `(n+1)`-sets with an invariant `n`-subset, and of all `(n+1)`-sets.
fn count_small_sets(vs: &[&View], n: usize) -> (u128, u128) {
    let full: u32 = if n + 1 >= 32 { u32::MAX } else { (1u32 << (n + 1)) - 1 };
    let mut cur: HashMap<(usize, u32), u128> = HashMap::new();
    cur.insert((0, 1), 1);
    for v in vs {
        let ps = profiles(v, false);
        let mut next: HashMap<(usize, u32), u128> = HashMap::new();
        for (&(total, mask), &c) in &cur {
            for p in &ps {
                let t = total + p.orbits.iter().sum::<usize>();
                if t > n + 1 {
                    continue;
                }
                let m = p.orbits.iter().fold(mask, |m, &s| add_orbit(m, s, full));
                *next.entry((t, m)).or_insert(0) += c * p.count;
            }
        }
        cur = next;
    }
    let mut good = 0;
    let mut all = 0;
    for (&(t, m), &c) in &cur {
        if t == n + 1 {
            all += c;
            if m >> n & 1 == 1 {
                good += c;
            }
        }
    }
    (good, all)
}

/// For unions of `r` whole blocks with more than `n` atoms: `r -> (members, admitting)`.
fn count_block_unions(vs: &[&View], n: usize) -> BTreeMap<usize, (u128, u128)> {
    let full: u32 = if n + 1 >= 32 { u32::MAX } else { (1u32 << (n + 1)) - 1 };
    let mut cur: HashMap<(usize, usize, u32), u128> = HashMap::new();
    cur.insert((0, 0, 1), 1);
    for v in vs {
        let b = v.atoms.len();
        let orbits = match v.action {
            Action::Trivial => vec![1; b],
            _ => vec![b],
        };
        let mut next = cur.clone();
        for (&(r, total, mask), &c) in &cur {
            let t = (total + b).min(n + 1);
            let m = orbits.iter().fold(mask, |m, &s| add_orbit(m, s, full));
            *next.entry((r + 1, t, m)).or_insert(0) += c;
        }
        cur = next;
    }
    let mut out: BTreeMap<usize, (u128, u128)> = BTreeMap::new();
    for (&(r, t, m), &c) in &cur {
        if r > 0 && t > n {
            let e = out.entry(r).or_insert((0, 0));
            e.0 += c;
            if m >> n & 1 == 1 {
                e.1 += c;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Supports

/// What a support may still touch: per class, the final blocks holding at
/// least `n + 1` atoms stay free, so every support leaves room for a
/// configuration of the principle's size.
struct Touchable {
    /// Cyclic blocks that may be added whole.
    blocks: Vec<usize>,
    /// Symmetric blocks with the largest number of atoms they may fix.
    sym: Vec<(usize, usize)>,
}

fn touchable(model: &ZooModel, vs: &[View], n: usize) -> Touchable {
    let mut by: BTreeMap<usize, Vec<&View>> = BTreeMap::new();
    for v in vs {
        by.entry(v.class).or_default().push(v);
    }
    let mut blocks = Vec::new();
    let mut sym = Vec::new();
    for class in by.values() {
        if model.symmetric() {
            for v in class {
                sym.push((v.block, v.atoms.len().saturating_sub(n + 1)));
            }
            continue;
        }
        let mut reserved = 0;
        let mut cut = class.len();
        while cut > 0 && reserved < n + 1 {
            cut -= 1;
            reserved += class[cut].atoms.len();
        }
        if reserved < n + 1 {
            continue;
        }
        blocks.extend(class[..cut].iter().filter(|v| matches!(v.action, Action::Cyclic)).map(|v| v.block));
    }
    Touchable { blocks, sym }
}

/// Supports reachable in one step that touch `block`.
fn grow(model: &ZooModel, e: SubsetCode, block: usize, t: &Touchable) -> Option<SubsetCode> {
    let b = &model.blocks[block];
    if t.blocks.contains(&block) {
        return Some(e.union(b.code()));
    }
    let &(_, max) = t.sym.iter().find(|(bi, _)| *bi == block)?;
    let inside = b.code().intersection(e).len();
    if inside >= max {
        return None;
    }
    let a = b.atoms().find(|&a| !e.contains(a))?;
    let mut e = e;
    e.insert(a);
    Some(e)
}

/// Atoms fixed by `fix_G(E)`.
fn fixed_atoms(model: &ZooModel, e: SubsetCode) -> SubsetCode {
    if model.symmetric() {
        return e;
    }
    model
        .blocks
        .iter()
        .filter(|b| !b.code().intersection(e).is_empty() || b.size == 1)
        .fold(e, |acc, b| acc.union(b.code()))
}

// ---------------------------------------------------------------------------
// Evaluation

/// A configuration refuting the principle, relative to one support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZooWitness {
    /// How to rebuild a refuting configuration away from any tested support.
    pub template: String,
    /// Class holding the configuration, when the principle is per class.
    pub class: Option<usize>,
    /// Block-union size `r` of the family that fails to grow, for `ncfin_minus`.
    pub family: Option<String>,
    /// The configuration for the model's own support.
    pub target: SubsetCode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZooVerdict {
    pub model: ZooKind,
    pub principle: ZooPrinciple,
    pub kind: VerdictKind,
    pub support_budget: usize,
    /// The support found, when the principle holds.
    pub support: Option<SubsetCode>,
    /// Atoms fixed by that support's group.
    pub fixed: Option<SubsetCode>,
    pub supports_tested: usize,
    pub witness: Option<ZooWitness>,
    pub certificate: Option<Certificate>,
}

impl ZooVerdict {
    pub fn holds(&self) -> bool {
        self.kind == VerdictKind::HoldsAtBound
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let mut s = format!("zoo {} {}: {}", self.model, self.principle, self.kind);
        if let Some(e) = self.support {
            s.push_str(&format!(" with support {e}"));
        }
        if let Some(w) = &self.witness {
            s.push_str(&format!("; witness {}", w.target));
        }
        s.push_str(&format!(" ({} supports tested, budget {})", self.supports_tested, self.support_budget));
        s
    }
}

fn by_class(vs: &[View]) -> BTreeMap<usize, Vec<&View>> {
    let mut by: BTreeMap<usize, Vec<&View>> = BTreeMap::new();
    for v in vs {
        by.entry(v.class).or_default().push(v);
    }
    by
}

/// First configuration refuting a per-set principle under the views.
fn violation(vs: &[View], p: ZooPrinciple, avoid_fixed: bool) -> Option<(Option<usize>, Vec<u32>)> {
    let n = p.n();
    match p {
        ZooPrinciple::NrcFin(_) | ZooPrinciple::Rc(_) => {
            let want = if matches!(p, ZooPrinciple::NrcFin(_)) { Want::Sel } else { Want::Choice };
            by_class(vs)
                .into_iter()
                .find_map(|(c, class)| find_violation(&class, n, want, avoid_fixed).map(|l| (Some(c), l)))
        }
        ZooPrinciple::CN(_) => {
            let all: Vec<&View> = vs.iter().collect();
            find_violation(&all, n, Want::Choice, avoid_fixed).map(|l| (None, l))
        }
        ZooPrinciple::NcfinMinus(_) => None,
    }
}

fn code(atoms: &[u32]) -> SubsetCode {
    SubsetCode::from_indices(atoms.iter().map(|&a| a as usize)).expect("atoms lie below 64")
}

fn template(p: ZooPrinciple) -> String {
    let n = p.n();
    match p {
        ZooPrinciple::NrcFin(_) => format!(
            "for a support E, the least set of more than {n} atoms inside one class, away from the blocks E fixes, whose orbit sizes under fix(E) have no subset summing to {n}"
        ),
        ZooPrinciple::Rc(_) => format!(
            "for a support E, the least {n}-set inside one class, away from the blocks E fixes, on which fix(E) has no fixed point"
        ),
        ZooPrinciple::CN(_) => format!(
            "for a support E, the least {n}-set of atoms, away from the blocks E fixes, on which fix(E) has no fixed point"
        ),
        ZooPrinciple::NcfinMinus(_) => format!(
            "for a support E, members of the family that avoid the blocks E fixes have no fix(E)-invariant {n}-subset, so the admitting members stay bounded as the cap grows"
        ),
    }
}

/// A configuration refuting `p` away from the atoms fixed by `E`, if any.
pub fn witness_for(model: &ZooModel, p: ZooPrinciple, e: SubsetCode) -> Result<Option<SubsetCode>> {
    check_principle(p)?;
    let vs = views(model, e.union(model.support), Keep::All);
    Ok(match p {
        ZooPrinciple::NcfinMinus(n) => bad_member(model, &vs, n, None).map(|(_, l)| l),
        _ => violation(&vs, p, true).map(|(_, l)| code(&l)),
    })
}

fn check_principle(p: ZooPrinciple) -> Result<()> {
    let n = p.n();
    if n == 0 || n > MAX_ZOO_N {
        return Err(Error::BoundExceeded(format!("principle arity {n} outside 1..={MAX_ZOO_N}")));
    }
    Ok(())
}

/// Searches supports `E ⊇ model.support` with `|E| <= e_max` on which the
/// principle's equivariant object exists on the whole approximation.
pub fn evaluate(model: &ZooModel, p: ZooPrinciple, e_max: usize) -> Result<ZooVerdict> {
    check_principle(p)?;
    model.validate()?;
    if model.support.len() > e_max {
        return Err(Error::Precondition(format!(
            "the model's support has {} atoms, above the budget {e_max}",
            model.support.len()
        )));
    }
    let mut tested = 0;
    let found = match p {
        ZooPrinciple::NcfinMinus(n) => search_growth(model, n, e_max, &mut tested)?,
        _ => search_hitting(model, p, e_max, &mut tested)?,
    };
    let mut verdict = ZooVerdict {
        model: model.name,
        principle: p,
        kind: VerdictKind::HoldsAtBound,
        support_budget: e_max,
        support: None,
        fixed: None,
        supports_tested: tested,
        witness: None,
        certificate: None,
    };
    if let Some(e) = found {
        verdict.support = Some(e);
        verdict.fixed = Some(fixed_atoms(model, e));
        return Ok(verdict);
    }
    verdict.kind = VerdictKind::Fails;
    let vs = views(model, model.support, Keep::All);
    let (class, family, target) = match p {
        ZooPrinciple::NcfinMinus(n) => {
            let small = views(model, model.support, Keep::Half);
            let fam = failing_family(&small, &vs, n).unwrap_or(Family::Sets);
            match bad_member(model, &vs, n, Some(fam)) {
                Some((c, l)) => (c, Some(fam.describe(n)), Some(l)),
                None => (None, Some(fam.describe(n)), None),
            }
        }
        _ => match violation(&vs, p, true).or_else(|| violation(&vs, p, false)) {
            Some((c, l)) => (c, None, Some(code(&l))),
            None => (None, None, None),
        },
    };
    if let Some(target) = target {
        verdict.certificate = certificate(model, &vs, p, target);
        verdict.witness = Some(ZooWitness { template: template(p), class, family, target });
    }
    Ok(verdict)
}

/// Depth-first search over supports: each violation found must be hit by
/// any support that works, so only its blocks are branched on.
fn search_hitting(model: &ZooModel, p: ZooPrinciple, e_max: usize, tested: &mut usize) -> Result<Option<SubsetCode>> {
    let base = views(model, model.support, Keep::All);
    let t = touchable(model, &base, p.n());
    let mut seen = HashSet::new();
    let mut stack = vec![model.support];
    while let Some(e) = stack.pop() {
        if !seen.insert(e) {
            continue;
        }
        *tested += 1;
        if *tested > MAX_SUPPORTS {
            return Err(Error::BoundExceeded(format!("more than {MAX_SUPPORTS} supports")));
        }
        let vs = views(model, e, Keep::All);
        let Some((_, l)) = violation(&vs, p, false) else {
            return Ok(Some(e));
        };
        let l = code(&l);
        let mut branches = Vec::new();
        for (bi, b) in model.blocks.iter().enumerate() {
            if b.code().intersection(l).is_empty() {
                continue;
            }
            if let Some(next) = grow(model, e, bi, &t) {
                if next.len() <= e_max && next != e {
                    branches.push(next);
                }
            }
        }
        // least first on pop
        branches.reverse();
        stack.extend(branches);
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    /// All sets of `n + 1` atoms.
    Sets,
    /// Unions of `r` whole blocks of one class.
    Unions { class: usize, r: usize },
}

impl Family {
    fn describe(&self, n: usize) -> String {
        match self {
            Family::Sets => format!("all {}-sets of atoms", n + 1),
            Family::Unions { class, r } => format!("unions of {r} whole blocks of class {class} with more than {n} atoms"),
        }
    }
}

/// `family -> (members, admitting)` for every designated family.
fn family_counts(vs: &[View], n: usize, symmetric: bool) -> BTreeMap<(usize, usize), (u128, u128)> {
    let mut out = BTreeMap::new();
    let all: Vec<&View> = vs.iter().collect();
    let (good, total) = count_small_sets(&all, n);
    out.insert((usize::MAX, 0), (total, good));
    if !symmetric {
        for (c, class) in by_class(vs) {
            let min = class.iter().map(|v| v.atoms.len()).min().unwrap_or(1);
            let r_max = n / min + 1;
            for (r, counts) in count_block_unions(&class, n) {
                if r <= r_max {
                    out.insert((c, r), counts);
                }
            }
        }
    }
    out
}

fn family_of(key: (usize, usize)) -> Family {
    if key.0 == usize::MAX {
        Family::Sets
    } else {
        Family::Unions { class: key.0, r: key.1 }
    }
}

/// First family whose admitting members do not grow from the small cap to the large one.
fn failing_family(small: &[View], large: &[View], n: usize) -> Option<Family> {
    let symmetric = large.iter().any(|v| matches!(v.action, Action::Sym { .. }));
    let s = family_counts(small, n, symmetric);
    let l = family_counts(large, n, symmetric);
    l.iter()
        .filter(|(_, &(members, _))| members > 0)
        .find(|(k, &(_, good))| good <= s.get(k).map_or(0, |&(_, g)| g))
        .map(|(&k, _)| family_of(k))
}

/// Enumerates supports by size; the first one under which every designated
/// family grows is returned.
fn search_growth(model: &ZooModel, n: usize, e_max: usize, tested: &mut usize) -> Result<Option<SubsetCode>> {
    let small = views(model, model.support, Keep::Half);
    let t = touchable(model, &small, n);
    let mut units: Vec<usize> = t.blocks.clone();
    units.extend(t.sym.iter().flat_map(|&(bi, max)| std::iter::repeat(bi).take(max)));
    let mut frontier = vec![model.support];
    let mut seen: HashSet<SubsetCode> = frontier.iter().copied().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &e in &frontier {
            *tested += 1;
            if *tested > MAX_SUPPORTS {
                return Err(Error::BoundExceeded(format!("more than {MAX_SUPPORTS} supports")));
            }
            let s = views(model, e, Keep::Half);
            let l = views(model, e, Keep::All);
            if failing_family(&s, &l, n).is_none() {
                return Ok(Some(e));
            }
            for &bi in &units {
                if let Some(g) = grow(model, e, bi, &t) {
                    if g.len() <= e_max && seen.insert(g) {
                        next.push(g);
                    }
                }
            }
        }
        next.sort_by(|a, b| a.len().cmp(&b.len()).then(a.lex_cmp(*b)));
        frontier = next;
    }
    Ok(None)
}

/// A member of `fam` (the first failing family when `None`) that avoids the
/// fixed atoms and has no invariant `n`-subset.
fn bad_member(model: &ZooModel, vs: &[View], n: usize, fam: Option<Family>) -> Option<(Option<usize>, SubsetCode)> {
    let fam = match fam {
        Some(f) => f,
        None => {
            let small: Vec<View> = {
                let e = vs
                    .iter()
                    .flat_map(|v| match v.action {
                        Action::Sym { fixed } => v.atoms[..fixed].to_vec(),
                        Action::Trivial => v.atoms.clone(),
                        Action::Cyclic => Vec::new(),
                    })
                    .fold(SubsetCode::EMPTY, |acc, a| acc.union(SubsetCode::singleton(a as usize)));
                views(model, e, Keep::Half)
            };
            failing_family(&small, vs, n)?
        }
    };
    match fam {
        Family::Sets => {
            let all: Vec<&View> = vs.iter().collect();
            find_violation(&all, n, Want::SelExact(n + 1), true).map(|l| (None, code(&l)))
        }
        Family::Unions { class, r } => {
            let free: Vec<&View> = vs
                .iter()
                .filter(|v| v.class == class && matches!(v.action, Action::Cyclic))
                .collect();
            let mut pick = Vec::new();
            first_bad_union(&free, r, n, 0, &mut pick).map(|l| (Some(class), l))
        }
    }
}

fn first_bad_union<'a>(free: &[&'a View], r: usize, n: usize, from: usize, pick: &mut Vec<&'a View>) -> Option<SubsetCode> {
    if pick.len() == r {
        let total: usize = pick.iter().map(|v| v.atoms.len()).sum();
        let sums = pick.iter().fold(1u64, |m, v| m | m << v.atoms.len().min(63));
        if total > n && sums >> n & 1 == 0 {
            let atoms: Vec<u32> = pick.iter().flat_map(|v| v.atoms.iter().copied()).collect();
            return Some(code(&atoms));
        }
        return None;
    }
    for i in from..free.len() {
        pick.push(free[i]);
        if let Some(l) = first_bad_union(free, r, n, i + 1, pick) {
            return Some(l);
        }
        pick.pop();
    }
    None
}

/// A target-local certificate: the blocks meeting the target, relabeled
/// from zero, with their part of `fix_G(E)`.
fn certificate(model: &ZooModel, vs: &[View], p: ZooPrinciple, target: SubsetCode) -> Option<Certificate> {
    let mut domain: Vec<u32> = Vec::new();
    let mut cycles: Vec<Vec<u32>> = Vec::new();
    for v in vs {
        let inside: Vec<u32> = v.atoms.iter().copied().filter(|&a| target.contains(a as usize)).collect();
        if inside.is_empty() {
            continue;
        }
        match v.action {
            Action::Trivial => domain.extend(&inside),
            Action::Cyclic => {
                domain.extend(&v.atoms);
                cycles.push(v.atoms.clone());
            }
            Action::Sym { fixed } => {
                domain.extend(&inside);
                let free: Vec<u32> = inside.iter().copied().filter(|a| !v.atoms[..fixed].contains(a)).collect();
                for w in free.windows(2) {
                    cycles.push(w.to_vec());
                }
            }
        }
    }
    domain.sort_unstable();
    let d = domain.len();
    let local = |a: u32| domain.binary_search(&a).expect("atom in the local domain");
    let gens: Vec<Perm> = cycles
        .iter()
        .map(|c| {
            let c: Vec<usize> = c.iter().map(|&a| local(a)).collect();
            Perm::from_cycles(d, &[&c]).expect("cycle on the local domain")
        })
        .collect();
    let limits = ClosureLimits { max_degree: MAX_DOMAIN, max_elements: CERT_ELEMENTS };
    let group = group_closure_with(d, &gens, limits).ok()?;
    let t = SubsetCode::from_indices(target.iter().map(|a| local(a as u32))).ok()?;
    let claim = Claim::ZooFailure { model: model.name.to_string(), principle: p.name().to_string(), n: p.n() };
    let mut cert = Certificate::new(claim, &group, SelTable::Explicit(Vec::new()), t);
    cert.support_template = template(p);
    Some(cert)
}

/// Invariant choice on the members of `family` whose stabilizer in
/// `fix_G(E)` has a fixed point: the least atom of the member inside `E`, or
/// the member's only atom. `E` is the model's support, or its first
/// `support_budget` atoms when the support is empty. Members with atoms
/// outside the model are skipped.
pub fn bfm_partial_choice(model: &ZooModel, family: &[Vec<u32>], support_budget: usize) -> Result<PartialSelection> {
    if model.name != ZooKind::Bfm {
        return Err(Error::Precondition(format!("{} is not a bfm model", model.name)));
    }
    let e = if model.support.is_empty() {
        SubsetCode::full(support_budget.min(model.atom_count))
    } else {
        model.support
    };
    let mut out = PartialSelection::new(1);
    for (j, m) in family.iter().enumerate() {
        if m.is_empty() || m.iter().any(|&a| a as usize >= model.atom_count) {
            continue;
        }
        let pick = match m.iter().copied().filter(|&a| e.contains(a as usize)).min() {
            Some(a) => Some(a),
            None if m.len() == 1 => Some(m[0]),
            None => None,
        };
        if let Some(a) = pick {
            out.assignments.insert(j, vec![a]);
        }
    }
    Ok(out)
}
