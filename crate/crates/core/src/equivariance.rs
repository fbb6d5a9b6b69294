//! Deciding and building group-equivariant selections.
//!
//! A `G`-equivariant `Sel` of arity `n` exists iff every subset `L` with `|L| > n`
//! has a `G_L`-invariant `n`-subset, where `G_L` is the setwise stabilizer. Such a
//! subset is a union of `G_L`-orbits on `L`, so the question is a subset sum over
//! orbit sizes. Choosing the subset on one orbit representative and pushing it
//! along the orbit is well defined: `gL = hL` puts `h⁻¹g` in `G_L`, which fixes
//! the chosen subset, so `g·S = h·S`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{point_orbits, PermGroup};
use crate::perm::Perm;
use crate::selection::{SelectionStructure, MAX_TABLE_DOMAIN};
use crate::subset::SubsetCode;

/// Largest degree for which every subset of the domain is scanned.
pub const MAX_SCAN_DEGREE: usize = 24;

/// Per-representative outcome of the orbit criterion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub rep: SubsetCode,
    /// Sizes of the stabilizer's point orbits on `rep`, ascending.
    pub stabilizer_orbit_sizes: Vec<usize>,
    /// Sizes of the orbits making up `selected`, ascending; absent on failure.
    pub chosen_blocks: Option<Vec<usize>>,
    /// The invariant subset chosen for `rep`.
    pub selected: Option<SubsetCode>,
}

/// Orbit data behind an equivariance verdict, in increasing representative order.
/// A failed search stops at the first failing representative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitCertificate {
    pub arity: usize,
    pub orbit_reps: Vec<OrbitEntry>,
}

impl OrbitCertificate {
    pub fn failing(&self) -> Option<SubsetCode> {
        self.orbit_reps.iter().find(|e| e.selected.is_none()).map(|e| e.rep)
    }
}

/// Which group element is used to carry a representative's choice to the rest
/// of its orbit. Either order must give an equivariant table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Transversal {
    #[default]
    First,
    Last,
}

/// Lexicographically least union of `blocks` with exactly `k` points, if any.
///
/// Blocks are taken in order of their least point; a block is kept whenever the
/// remaining target is still reachable from the blocks after it.
pub fn least_block_union(blocks: &[SubsetCode], k: usize) -> Option<SubsetCode> {
    let mut blocks = blocks.to_vec();
    blocks.sort_by_key(|b| b.first());
    // reach[i]: sums attainable from blocks[i..]
    let mut reach = vec![0u128; blocks.len() + 1];
    reach[blocks.len()] = 1;
    for i in (0..blocks.len()).rev() {
        let s = blocks[i].len();
        reach[i] = reach[i + 1] | if s < 128 { reach[i + 1] << s } else { 0 };
    }
    if k >= 128 || reach[0] >> k & 1 == 0 {
        return None;
    }
    let mut left = k;
    let mut out = SubsetCode::EMPTY;
    for (i, b) in blocks.iter().enumerate() {
        let s = b.len();
        if s <= left && reach[i + 1] >> (left - s) & 1 == 1 {
            out = out.union(*b);
            left -= s;
        }
    }
    Some(out)
}

/// Is there a `g`-invariant `k`-subset of `L`? Returns the lexicographically least one.
pub fn invariant_ksubset_exists(g: &PermGroup, l: SubsetCode, k: usize) -> Result<Option<SubsetCode>> {
    if k == 0 || k >= l.len() {
        return Err(Error::Precondition(format!("need 0 < k < |L|, got k = {k}, |L| = {}", l.len())));
    }
    let blocks = g.orbits_on_points(l)?;
    Ok(least_block_union(&blocks, k))
}

/// Walks the `g`-orbits on subsets of the domain whose size passes `keep`, in
/// increasing order of the least code in each orbit. `visit` receives the
/// representative, its stabilizer elements, and a transversal `(gL, g)`; it
/// returns `false` to stop.
fn scan_orbits(
    g: &PermGroup,
    keep: impl Fn(usize) -> bool,
    order: Transversal,
    mut visit: impl FnMut(SubsetCode, &[&Perm], &[(SubsetCode, &Perm)]) -> bool,
) -> Result<()> {
    let d = g.degree();
    if d > MAX_SCAN_DEGREE {
        return Err(Error::BoundExceeded(format!("subset scans are limited to degree {MAX_SCAN_DEGREE}")));
    }
    let mut visited = vec![0u64; ((1usize << d) + 63) / 64];
    let elements: Vec<&Perm> = match order {
        Transversal::First => g.elements().iter().collect(),
        Transversal::Last => g.elements().iter().rev().collect(),
    };
    for code in 0..(1u64 << d) {
        if !keep(code.count_ones() as usize) || visited[(code / 64) as usize] >> (code % 64) & 1 == 1 {
            continue;
        }
        let l = SubsetCode(code);
        let mut stab = Vec::new();
        let mut transversal = Vec::new();
        for &x in &elements {
            let y = x.apply_subset(l);
            if y == l {
                stab.push(x);
            }
            let slot = &mut visited[(y.0 / 64) as usize];
            if *slot >> (y.0 % 64) & 1 == 0 {
                *slot |= 1 << (y.0 % 64);
                transversal.push((y, x));
            }
        }
        if !visit(l, &stab, &transversal) {
            break;
        }
    }
    Ok(())
}

fn entry_for(l: SubsetCode, stab: &[&Perm], k: usize) -> OrbitEntry {
    let gens: Vec<Perm> = stab.iter().map(|p| (*p).clone()).collect();
    let blocks = point_orbits(&gens, l);
    let mut sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
    sizes.sort_unstable();
    let selected = least_block_union(&blocks, k);
    let chosen_blocks = selected.map(|s| {
        let mut c: Vec<usize> = blocks.iter().filter(|b| b.is_subset_of(s)).map(|b| b.len()).collect();
        c.sort_unstable();
        c
    });
    OrbitEntry { rep: l, stabilizer_orbit_sizes: sizes, chosen_blocks, selected }
}

/// Does `g` admit an equivariant selection of arity `n` on its whole domain?
pub fn equivariant_sel_exists(g: &PermGroup, n: usize) -> Result<(bool, OrbitCertificate)> {
    if n == 0 || g.degree() <= n {
        return Err(Error::Precondition(format!("need 0 < arity < degree, got arity {n}, degree {}", g.degree())));
    }
    let mut reps = Vec::new();
    let mut ok = true;
    scan_orbits(g, |s| s > n, Transversal::First, |l, stab, _| {
        let e = entry_for(l, stab, n);
        ok = e.selected.is_some();
        reps.push(e);
        ok
    })?;
    Ok((ok, OrbitCertificate { arity: n, orbit_reps: reps }))
}

/// The `g`-equivariant selection built from least invariant subsets on orbit
/// representatives.
pub fn build_equivariant_sel(g: &PermGroup, n: usize) -> Result<SelectionStructure> {
    build_equivariant_sel_with(g, n, Transversal::First)
}

pub fn build_equivariant_sel_with(g: &PermGroup, n: usize, order: Transversal) -> Result<SelectionStructure> {
    let d = g.degree();
    if n == 0 || d <= n {
        return Err(Error::Precondition(format!("need 0 < arity < degree, got arity {n}, degree {d}")));
    }
    if d > MAX_TABLE_DOMAIN {
        return Err(Error::BoundExceeded(format!("explicit tables are limited to {MAX_TABLE_DOMAIN} points")));
    }
    let mut table = vec![SubsetCode::EMPTY; 1 << d];
    let mut failing = None;
    scan_orbits(g, |s| s > n, order, |l, stab, transversal| {
        let e = entry_for(l, stab, n);
        let Some(s) = e.selected else {
            failing = Some(l);
            return false;
        };
        for &(y, x) in transversal {
            table[y.0 as usize] = x.apply_subset(s);
        }
        true
    })?;
    if let Some(l) = failing {
        return Err(Error::NoEquivariantSel(l.to_string()));
    }
    SelectionStructure::from_fn(d, n, |l| table[l.0 as usize])
}

/// Can `g` act equivariantly on a choice of one point from every `m`-subset?
/// Returns the least failing representative when it cannot.
pub fn equivariant_choice_exists(g: &PermGroup, m: usize) -> Result<(bool, Option<SubsetCode>)> {
    if m > g.degree() {
        return Err(Error::Precondition(format!("m = {m} exceeds the degree {}", g.degree())));
    }
    let mut failing = None;
    scan_orbits(g, |s| s == m, Transversal::First, |l, stab, _| {
        let fixed = l.iter().any(|x| stab.iter().all(|p| p.apply(x) == x));
        if !fixed {
            failing = Some(l);
        }
        fixed
    })?;
    Ok((failing.is_none(), failing))
}

/// Arity `k·n` selection obtained by selecting `k` times, each time from what is left.
pub fn compose_sel(m: &SelectionStructure, k: usize) -> Result<SelectionStructure> {
    let n = m.arity();
    let target = k * n;
    if k == 0 || target + 1 > m.domain_size() {
        return Err(Error::Precondition(format!(
            "composed arity {target} needs k >= 1 and at most {} points",
            m.domain_size().saturating_sub(1)
        )));
    }
    SelectionStructure::from_fn(m.domain_size(), target, |l| {
        let mut rest = l;
        let mut out = SubsetCode::EMPTY;
        for _ in 0..k {
            let s = m.get(rest).expect("residual stays above the arity");
            out = out.union(s);
            rest = rest.difference(s);
        }
        out
    })
}
