//! Automorphism groups and canonical labelings of small selection structures.

use crate::error::{Error, Result};
use crate::group::PermGroup;
use crate::perm::Perm;
use crate::selection::SelectionStructure;
use crate::subset::SubsetCode;

/// Largest domain accepted by the exhaustive searches here.
pub const MAX_CANON_DOMAIN: usize = 10;

fn guard(m: &SelectionStructure) -> Result<()> {
    if m.domain_size() > MAX_CANON_DOMAIN {
        return Err(Error::BoundExceeded(format!(
            "domain {} exceeds the canonical-form cap {MAX_CANON_DOMAIN}",
            m.domain_size()
        )));
    }
    Ok(())
}

/// All permutations `π` with `π(Sel(L)) = Sel(π L)` for every entry.
pub fn automorphism_group(m: &SelectionStructure) -> Result<PermGroup> {
    guard(m)?;
    let n = m.domain_size();
    let mut found = Vec::new();
    let mut images = vec![usize::MAX; n];
    let mut used = 0u64;
    aut_search(m, 0, &mut images, &mut used, &mut found);
    Ok(PermGroup::from_closed_elements(n, found))
}

fn aut_search(m: &SelectionStructure, k: usize, images: &mut [usize], used: &mut u64, out: &mut Vec<Perm>) {
    let n = images.len();
    if k == n {
        out.push(Perm::from_images(images.to_vec()).unwrap());
        return;
    }
    for y in 0..n {
        if *used >> y & 1 == 1 {
            continue;
        }
        images[k] = y;
        *used |= 1 << y;
        if aut_prefix_ok(m, k, images) {
            aut_search(m, k + 1, images, used, out);
        }
        *used &= !(1 << y);
    }
    images[k] = usize::MAX;
}

// checks entries whose largest point is k
fn aut_prefix_ok(m: &SelectionStructure, k: usize, images: &[usize]) -> bool {
    let map = |s: SubsetCode| SubsetCode(s.iter().fold(0, |acc, i| acc | 1 << images[i]));
    let lower = SubsetCode::full(k);
    for rest in lower.subsets() {
        if rest.len() < m.arity() {
            continue;
        }
        let mut l = rest;
        l.insert(k);
        let v = m.get(l).unwrap();
        if m.get(map(l)) != Some(map(v)) {
            return false;
        }
    }
    true
}

/// A canonical representative `κ(m)` and a relabeling `π` with `π·m = κ(m)`.
///
/// `κ(m)` minimizes the table read in subset-code order; since the codes below
/// `2^k` are exactly the subsets of `{0..k-1}`, fixing the preimages of the first
/// `k` points fixes that prefix, and candidates are pruned level by level.
pub fn canonical_form(m: &SelectionStructure) -> Result<(SelectionStructure, Perm)> {
    guard(m)?;
    let n = m.domain_size();
    // each candidate lists preimages sigma[0..k]
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..n {
        let mut best: Option<Vec<u64>> = None;
        let mut next: Vec<Vec<usize>> = Vec::new();
        for cand in &candidates {
            for x in 0..n {
                if cand.contains(&x) {
                    continue;
                }
                let mut sigma = cand.clone();
                sigma.push(x);
                let chunk = level_chunk(m, &sigma);
                match &best {
                    Some(b) if chunk > *b => {}
                    Some(b) if chunk == *b => next.push(sigma),
                    _ => {
                        best = Some(chunk);
                        next.clear();
                        next.push(sigma);
                    }
                }
            }
        }
        candidates = next;
    }
    let sigma = &candidates[0];
    let pi = Perm::from_images(sigma.clone()).unwrap().inverse();
    Ok((m.relabel(&pi), pi))
}

// table values for the subsets of {0..k} that contain k, in code order
fn level_chunk(m: &SelectionStructure, sigma: &[usize]) -> Vec<u64> {
    let k = sigma.len() - 1;
    let mut pi = [0usize; 64];
    for (i, &x) in sigma.iter().enumerate() {
        pi[x] = i;
    }
    let mut out = Vec::new();
    for rest in SubsetCode::full(k).subsets() {
        if rest.len() < m.arity() {
            continue;
        }
        let mut l = rest;
        l.insert(k);
        let orig = SubsetCode(l.iter().fold(0, |acc, i| acc | 1 << sigma[i]));
        let v = m.get(orig).unwrap();
        out.push(v.iter().fold(0u64, |acc, i| acc | 1 << pi[i]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::factorial;
    use crate::selection::enumerate_structures;

    fn brute_aut(m: &SelectionStructure) -> Vec<Perm> {
        let n = m.domain_size();
        (0..factorial(n)).map(|r| Perm::unrank(n, r)).filter(|p| m.is_preserved_by(p)).collect()
    }

    #[test]
    fn single_entry_structure() {
        // n+1 points, Sel(full) = first n points: automorphisms fix the last point
        for n in 1..5 {
            let m = SelectionStructure::least(n + 1, n).unwrap();
            let g = automorphism_group(&m).unwrap();
            assert_eq!(g.order(), factorial(n));
            assert!(g.elements().iter().all(|p| p.fixes_point(n)));
        }
    }

    #[test]
    fn matches_brute_force_on_all_small_structures() {
        for m in enumerate_structures(4, 2).unwrap() {
            let g = automorphism_group(&m).unwrap();
            assert_eq!(g.elements(), &brute_aut(&m)[..]);
        }
    }

    #[test]
    fn rigid_structure_has_trivial_group() {
        // on 4 points with arity 2, search for a structure with trivial automorphism group
        let rigid = enumerate_structures(4, 2)
            .unwrap()
            .find(|m| brute_aut(m).len() == 1)
            .expect("some rigid structure exists");
        assert_eq!(automorphism_group(&rigid).unwrap().order(), 1);
    }

    #[test]
    fn canonical_form_is_invariant() {
        for m in enumerate_structures(4, 2).unwrap().step_by(7) {
            let (k, pi) = canonical_form(&m).unwrap();
            assert_eq!(m.relabel(&pi), k);
            assert_eq!(canonical_form(&k).unwrap().0, k);
            for r in [1usize, 5, 13, 23] {
                let sigma = Perm::unrank(4, r);
                assert_eq!(canonical_form(&m.relabel(&sigma)).unwrap().0, k);
            }
        }
    }

    #[test]
    fn canonical_forms_separate_classes() {
        // brute-force isomorphism classes on 4 points, arity 2
        let all: Vec<_> = enumerate_structures(4, 2).unwrap().collect();
        let mut classes: Vec<SelectionStructure> = Vec::new();
        for m in &all {
            let iso = classes
                .iter()
                .any(|c| (0..24).any(|r| &m.relabel(&Perm::unrank(4, r)) == c));
            if !iso {
                classes.push(m.clone());
            }
        }
        let mut kappas: Vec<_> = all.iter().map(|m| canonical_form(m).unwrap().0).collect();
        kappas.sort_by_key(|k| format!("{k:?}"));
        kappas.dedup();
        assert_eq!(kappas.len(), classes.len());
    }
}
