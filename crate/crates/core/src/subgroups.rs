//! Conjugacy-class representatives of subgroups of small symmetric groups.
//!
//! Breadth-first "add one generator and close" from the trivial group. Candidate
//! generators for an extension of `H` are taken one per orbit of the action
//! `g ↦ x h g h' x⁻¹` (`h, h' ∈ H`, `x ∈ N(H)`), since every element of such an
//! orbit yields a conjugate of `⟨H, g⟩`. New groups are bucketed by cheap
//! invariants and compared by an explicit conjugacy search.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::group::{group_closure_with, ClosureLimits, PermGroup};
use crate::perm::{factorial, Perm};

/// Largest degree for the full subgroup enumeration.
pub const MAX_ALL_DEGREE: usize = 8;
/// Largest degree for cyclic-only enumeration.
pub const MAX_CYCLIC_DEGREE: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubgroupFilter {
    All,
    FixedPointFree,
    MinimalFixedPointFree,
}

/// One representative per conjugacy class of subgroups of `S_N`, filtered.
pub fn enumerate_subgroups(degree: usize, filter: SubgroupFilter) -> Result<Vec<PermGroup>> {
    if degree > MAX_ALL_DEGREE {
        return Err(Error::BoundExceeded(format!(
            "full subgroup enumeration is limited to degree {MAX_ALL_DEGREE}"
        )));
    }
    let all = cached_classes(degree);
    Ok(match filter {
        SubgroupFilter::All => all.to_vec(),
        SubgroupFilter::FixedPointFree => all.iter().filter(|g| g.is_fixed_point_free()).cloned().collect(),
        SubgroupFilter::MinimalFixedPointFree => all
            .iter()
            .filter(|g| g.is_fixed_point_free() && is_minimal_fpf(g))
            .cloned()
            .collect(),
    })
}

// The degree-8 list takes seconds to build, so keep one copy per process.
fn cached_classes(degree: usize) -> Arc<Vec<PermGroup>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<PermGroup>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&degree) {
        return hit.clone();
    }
    let built = Arc::new(all_subgroup_classes(degree));
    cache.lock().unwrap().entry(degree).or_insert(built).clone()
}

/// Cyclic subgroup classes: one per cycle type (partition of `degree`).
/// With `fixed_point_free`, partitions with a part of size 1 are skipped.
pub fn cyclic_subgroups(degree: usize, fixed_point_free: bool) -> Result<Vec<PermGroup>> {
    if degree > MAX_CYCLIC_DEGREE {
        return Err(Error::BoundExceeded(format!(
            "cyclic enumeration is limited to degree {MAX_CYCLIC_DEGREE}"
        )));
    }
    let limits = ClosureLimits { max_degree: MAX_CYCLIC_DEGREE, max_elements: 1_000_000 };
    let mut out = Vec::new();
    for parts in partitions(degree) {
        if fixed_point_free && parts.contains(&1) {
            continue;
        }
        let gen = cycle_type_perm(degree, &parts);
        let gens = if gen.is_identity() { vec![] } else { vec![gen] };
        out.push(group_closure_with(degree, &gens, limits)?);
    }
    Ok(out)
}

/// The standard permutation with the given cycle lengths on consecutive points.
pub fn cycle_type_perm(degree: usize, parts: &[usize]) -> Perm {
    let mut images: Vec<usize> = (0..degree).collect();
    let mut start = 0;
    for &len in parts {
        for k in 0..len {
            images[start + k] = start + (k + 1) % len;
        }
        start += len;
    }
    Perm::from_images(images).unwrap()
}

/// Partitions of `n` into non-increasing parts, in reverse lexicographic order.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=n.min(max)).rev() {
            cur.push(p);
            rec(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Conjugacy-invariant fingerprint used for bucketing.
fn invariants(g: &PermGroup) -> (usize, Vec<usize>, Vec<(Vec<usize>, usize)>) {
    let mut orbit_sizes: Vec<usize> = g.orbits().iter().map(|o| o.len()).collect();
    orbit_sizes.sort_unstable();
    let mut types: HashMap<Vec<usize>, usize> = HashMap::new();
    for e in g.elements() {
        *types.entry(e.cycle_type()).or_default() += 1;
    }
    let mut types: Vec<_> = types.into_iter().collect();
    types.sort();
    (g.order(), orbit_sizes, types)
}

/// Some `x ∈ S_N` with `x A x⁻¹ = B`.
///
/// Picks a short generating tuple `(a_1, ..)` of `A`, tries images `(b_1, ..)` in
/// `B` with matching cycle types (`b_1` only up to conjugacy inside `B`), and
/// solves the simultaneous conjugacy `x a_i x⁻¹ = b_i` by orbit propagation.
pub fn find_conjugator(a: &PermGroup, b: &PermGroup) -> Option<Perm> {
    if a.degree() != b.degree() || a.order() != b.order() {
        return None;
    }
    let n = a.degree();
    if a.order() == 1 {
        return Some(Perm::identity(n));
    }
    let gens = short_generating_tuple(a);
    let types: Vec<Vec<usize>> = gens.iter().map(|g| g.cycle_type()).collect();
    let mut cands: Vec<Vec<&Perm>> = types
        .iter()
        .map(|t| b.elements().iter().filter(|e| &e.cycle_type() == t).collect())
        .collect();
    cands[0] = conjugacy_class_reps(b, &cands[0]);
    let prod_types: Vec<Vec<usize>> = (1..gens.len()).map(|i| gens[0].compose(&gens[i]).cycle_type()).collect();
    let mut chosen: Vec<&Perm> = Vec::with_capacity(gens.len());
    tuple_search(&gens, &cands, &prod_types, &mut chosen)
}

fn tuple_search<'a>(
    gens: &[Perm],
    cands: &[Vec<&'a Perm>],
    prod_types: &[Vec<usize>],
    chosen: &mut Vec<&'a Perm>,
) -> Option<Perm> {
    let i = chosen.len();
    if i == gens.len() {
        return solve_simultaneous(gens, chosen);
    }
    for &c in &cands[i] {
        if i > 0 && chosen[0].compose(c).cycle_type() != prod_types[i - 1] {
            continue;
        }
        chosen.push(c);
        if let Some(x) = tuple_search(gens, cands, prod_types, chosen) {
            return Some(x);
        }
        chosen.pop();
    }
    None
}

// x with x a_i x^-1 = b_i for all i
fn solve_simultaneous(a: &[Perm], b: &[&Perm]) -> Option<Perm> {
    let n = a[0].degree();
    let mut x = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn rec(a: &[Perm], b: &[&Perm], x: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        let Some(p) = x.iter().position(|&v| v == usize::MAX) else {
            return true;
        };
        let n = x.len();
        for q in 0..n {
            if used[q] {
                continue;
            }
            let snapshot = x.clone();
            let used_snapshot = used.clone();
            if propagate(a, b, x, used, p, q) && rec(a, b, x, used) {
                return true;
            }
            *x = snapshot;
            *used = used_snapshot;
        }
        false
    }
    fn propagate(a: &[Perm], b: &[&Perm], x: &mut [usize], used: &mut [bool], p: usize, q: usize) -> bool {
        let mut stack = vec![(p, q)];
        while let Some((p, q)) = stack.pop() {
            if x[p] != usize::MAX {
                if x[p] != q {
                    return false;
                }
                continue;
            }
            if used[q] {
                return false;
            }
            x[p] = q;
            used[q] = true;
            for (ai, bi) in a.iter().zip(b) {
                stack.push((ai.apply(p), bi.apply(q)));
            }
        }
        true
    }
    rec(a, b, &mut x, &mut used).then(|| Perm::from_images(x).unwrap())
}

fn conjugacy_class_reps<'a>(g: &PermGroup, subset: &[&'a Perm]) -> Vec<&'a Perm> {
    let mut seen: HashSet<Perm> = HashSet::new();
    let mut reps = Vec::new();
    for &e in subset {
        if seen.contains(e) {
            continue;
        }
        reps.push(e);
        let mut stack = vec![e.clone()];
        seen.insert(e.clone());
        while let Some(y) = stack.pop() {
            for h in g.generators() {
                let z = y.conjugate_by(h);
                if seen.insert(z.clone()) {
                    stack.push(z);
                }
            }
        }
    }
    reps
}

/// A short generating tuple: a seeded search for two generators, else greedy.
fn short_generating_tuple(g: &PermGroup) -> Vec<Perm> {
    use rand::{Rng, SeedableRng};
    let n = g.degree();
    let limits = ClosureLimits { max_degree: 64, max_elements: 1_000_000 };
    let els = g.elements();
    let mut best: Option<&Perm> = None;
    for e in els {
        if best.is_none_or(|b| e.order() > b.order()) {
            best = Some(e);
        }
    }
    let top = best.unwrap();
    if top.order() == g.order() {
        return vec![top.clone()];
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(g.order() as u64);
    for _ in 0..24 {
        let e = &els[rng.gen_range(0..els.len())];
        let h = group_closure_with(n, &[top.clone(), e.clone()], limits).unwrap();
        if h.order() == g.order() {
            return vec![top.clone(), e.clone()];
        }
    }
    g.generators().to_vec()
}

fn all_subgroup_classes(n: usize) -> Vec<PermGroup> {
    let total = factorial(n);
    let sym: Vec<Perm> = (0..total).map(|r| Perm::unrank(n, r)).collect();
    let mut classes: Vec<PermGroup> = vec![PermGroup::trivial(n)];
    let mut buckets: HashMap<_, Vec<usize>> = HashMap::new();
    buckets.entry(invariants(&classes[0])).or_default().push(0);
    let mut exact: HashSet<Vec<u32>> = HashSet::new();
    let mut scratch = vec![false; total];
    let arrays: Vec<[u8; 8]> = sym.iter().map(to_array).collect();
    let alternating: Vec<u32> = (0..total)
        .filter(|&r| is_even_array(&to_array(&sym[r]), n))
        .map(|r| r as u32)
        .collect();
    let mut head = 0;
    while head < classes.len() {
        let h = classes[head].clone();
        head += 1;
        if h.order() == total {
            continue;
        }
        let mut in_h = vec![false; total];
        for &r in &h_ranks(&h) {
            in_h[r] = true;
        }
        let h_gens: Vec<[u8; 8]> = h.generators().iter().map(to_array).collect();
        let normalizer: Vec<usize> = (0..total)
            .filter(|&r| {
                let x = &arrays[r];
                let xi = invert_array(x, n);
                h_gens.iter().all(|g| in_h[rank_array(&mul(x, &mul(g, &xi, n), n), n)])
            })
            .collect();
        let norm_gens = array_generating_set(n, &normalizer, &arrays, &mut scratch);
        let norm_invs: Vec<[u8; 8]> = norm_gens.iter().map(|x| invert_array(x, n)).collect();
        // Orbits of g ↦ h g and g ↦ x g x⁻¹ (x ∈ N(H)) all give the same ⟨H, g⟩ up to
        // conjugacy. They are unions of cosets Hg, so mark whole cosets.
        let h_elems: Vec<[u8; 8]> = h.elements().iter().map(to_array).collect();
        let mut visited = vec![false; total];
        let mut reps = Vec::new();
        for r in 0..total {
            if visited[r] {
                continue;
            }
            if !in_h[r] {
                reps.push(r);
            }
            let mut stack = vec![arrays[r]];
            mark_coset(n, &h_elems, &arrays[r], &mut visited);
            while let Some(g) = stack.pop() {
                for (x, xi) in norm_gens.iter().zip(&norm_invs) {
                    let y = mul(x, &mul(&g, xi, n), n);
                    if !visited[rank_array(&y, n)] {
                        mark_coset(n, &h_elems, &y, &mut visited);
                        stack.push(y);
                    }
                }
            }
        }
        for r in reps {
            let mut gens = h_gens.clone();
            gens.push(arrays[r]);
            let ranks = match coset_closure(n, &h_elems, &gens, &mut scratch, true) {
                Some(ranks) => ranks,
                None if gens.iter().all(|g| is_even_array(g, n)) => alternating.clone(),
                None => (0..total as u32).collect(),
            };
            if !exact.insert(ranks.clone()) {
                continue;
            }
            let k = PermGroup::from_closed_elements(n, ranks.iter().map(|&r| sym[r as usize].clone()).collect());
            let key = invariants(&k);
            let bucket = buckets.entry(key).or_default();
            if bucket.iter().any(|&i| find_conjugator(&k, &classes[i]).is_some()) {
                continue;
            }
            bucket.push(classes.len());
            classes.push(k);
        }
    }
    classes.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.elements().cmp(b.elements())));
    classes
}

fn to_array(p: &Perm) -> [u8; 8] {
    let mut a = [0u8; 8];
    for (i, x) in p.images().into_iter().enumerate() {
        a[i] = x as u8;
    }
    a
}

fn rank_array(a: &[u8; 8], n: usize) -> usize {
    let mut used = 0u32;
    let mut r = 0usize;
    for (i, &x) in a.iter().take(n).enumerate() {
        let smaller_unused = x as usize - (used & ((1u32 << x) - 1)).count_ones() as usize;
        r = r * (n - i) + smaller_unused;
        used |= 1 << x;
    }
    r
}

// sorted ranks of the closure of `gens` (degree <= 8)
/// Closure of `⟨H, gens⟩` as sorted ranks, built coset by coset from the known
/// elements of `H`. `None` when the result has index below `n` (so it is `A_n` or
/// `S_n`, for `n ≥ 5`).
fn coset_closure(
    n: usize,
    h_elems: &[[u8; 8]],
    gens: &[[u8; 8]],
    seen: &mut [bool],
    abort: bool,
) -> Option<Vec<u32>> {
    let total = seen.len();
    let mut out: Vec<u32> = Vec::with_capacity(h_elems.len() * 2);
    for h in h_elems {
        let r = rank_array(h, n);
        seen[r] = true;
        out.push(r as u32);
    }
    let mut id = [0u8; 8];
    for (i, v) in id.iter_mut().enumerate() {
        *v = i as u8;
    }
    let mut reps = vec![id];
    let mut i = 0;
    let mut aborted = false;
    'outer: while i < reps.len() {
        let r = reps[i];
        i += 1;
        for s in gens {
            let mut e = [0u8; 8];
            for j in 0..n {
                e[j] = r[s[j] as usize];
            }
            if seen[rank_array(&e, n)] {
                continue;
            }
            for h in h_elems {
                let mut z = [0u8; 8];
                for j in 0..n {
                    z[j] = h[e[j] as usize];
                }
                let rz = rank_array(&z, n);
                seen[rz] = true;
                out.push(rz as u32);
            }
            reps.push(e);
            if abort && n >= 5 && out.len() * n > total {
                aborted = true;
                break 'outer;
            }
        }
    }
    for &r in &out {
        seen[r as usize] = false;
    }
    if aborted {
        return None;
    }
    out.sort_unstable();
    Some(out)
}

/// Greedy generating set of the group whose elements have the given ranks.
fn array_generating_set(n: usize, ranks: &[usize], arrays: &[[u8; 8]], scratch: &mut [bool]) -> Vec<[u8; 8]> {
    let mut id = [0u8; 8];
    for (i, v) in id.iter_mut().enumerate() {
        *v = i as u8;
    }
    let mut span_elems = vec![id];
    let mut in_span = vec![false; arrays.len()];
    in_span[rank_array(&id, n)] = true;
    let mut gens: Vec<[u8; 8]> = Vec::new();
    for &r in ranks {
        if in_span[r] {
            continue;
        }
        gens.push(arrays[r]);
        let closed = coset_closure(n, &span_elems, &gens, scratch, false).unwrap_or_default();
        span_elems = closed.iter().map(|&q| arrays[q as usize]).collect();
        for &q in &closed {
            in_span[q as usize] = true;
        }
    }
    gens
}

fn mark_coset(n: usize, h_elems: &[[u8; 8]], g: &[u8; 8], visited: &mut [bool]) {
    for h in h_elems {
        visited[rank_array(&mul(h, g, n), n)] = true;
    }
}

/// `a ∘ b` (apply `b` first).
fn mul(a: &[u8; 8], b: &[u8; 8], n: usize) -> [u8; 8] {
    let mut c = [0u8; 8];
    for i in 0..n {
        c[i] = a[b[i] as usize];
    }
    c
}

fn invert_array(a: &[u8; 8], n: usize) -> [u8; 8] {
    let mut c = [0u8; 8];
    for i in 0..n {
        c[a[i] as usize] = i as u8;
    }
    c
}

fn h_ranks(h: &PermGroup) -> Vec<usize> {
    h.elements().iter().map(|p| p.rank()).collect()
}

fn is_even_array(a: &[u8; 8], n: usize) -> bool {
    let mut seen = 0u32;
    let mut transpositions = 0;
    for s in 0..n {
        if seen >> s & 1 == 1 {
            continue;
        }
        let mut x = s;
        let mut len = 0;
        while seen >> x & 1 == 0 {
            seen |= 1 << x;
            x = a[x] as usize;
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 0
}

/// Whether every proper subgroup of the fixed-point-free group `g` has a fixed point.
pub fn is_minimal_fpf(g: &PermGroup) -> bool {
    let n = g.degree();
    let limits = ClosureLimits { max_degree: 64, max_elements: 1_000_000 };
    for e in g.elements() {
        if e.order() < g.order() && !e.cycle_type().contains(&1) {
            return false;
        }
    }
    // subgroups of g with a fixed point, extended one element at a time
    let mut seen: HashSet<Vec<Perm>> = HashSet::new();
    let mut queue = vec![PermGroup::trivial(n)];
    seen.insert(queue[0].elements().to_vec());
    while let Some(h) = queue.pop() {
        for e in g.elements() {
            if h.contains(e) {
                continue;
            }
            let mut gens = h.generators().to_vec();
            gens.push(e.clone());
            let k = group_closure_with(n, &gens, limits).unwrap();
            if k.order() == g.order() || !seen.insert(k.elements().to_vec()) {
                continue;
            }
            if k.is_fixed_point_free() {
                return false;
            }
            queue.push(k);
        }
    }
    true
}
