//! Staged construction of the generic selection model.
//!
//! Stage `s + 1` adds, for every `A ⊆ F_s` with `|A| ≤ n` and every
//! embedding of `F_s|A` into a representative `R` with `|R| = |A| + 1 ≤ s + 1`,
//! one fresh atom `a` making `A ∪ {a}` a copy of `R`. The embedding fixes
//! `Sel(A ∪ {a})` when `|A| = n`; every other subset of the stage gets its
//! `n` largest elements.
//!
//! The selection is stored implicitly: the embedding-determined values are
//! kept as exceptions and everything else follows the default rule. Since all
//! sets of size `n + 2` or more follow the default rule, a bijection between
//! subsets of a stage preserves `Sel` as soon as it does so on the sets of
//! sizes `n + 1` and `n + 2`: if `T` is the top `n` of a larger `X`, any two
//! further points `y, z ∈ X` give `T ∪ {y, z}` with top `T`, which pins every
//! image of `X ∖ T` below the image of `T`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canon::canonical_form;
use crate::error::{Error, Result};
use crate::selection::{enumerate_structures, SelectionStructure};
use crate::subset::SubsetCode;

/// Largest stage `build_stage` completes without an explicit cap.
pub const STAGE_CAP: usize = 64;

/// Where an atom came from: the ground `A_i`, the representative `R_k`, and
/// the embedding `j_l`, each as an index into its stage's enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: usize,
    pub ground_index: usize,
    pub rep_index: usize,
    pub embedding: usize,
}

/// A finite stage `F_s`, possibly only partly built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FraisseStage {
    arity: usize,
    /// `|F_0|, |F_1|, ...`; the last entry is the current atom count.
    boundaries: Vec<usize>,
    grounds: Vec<Vec<u32>>,
    provenance: Vec<Provenance>,
    /// Embedding-determined values of `Sel`, keyed by sorted sets.
    exceptions: BTreeMap<Vec<u32>, Vec<u32>>,
    /// Next embedding to realize when the last stage was cut short.
    pending: Option<usize>,
}

/// Outcome of a capped build.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageOutcome {
    Complete(FraisseStage),
    /// The cap was hit; [`resume_stage`] continues from here.
    Partial(FraisseStage),
}

impl FraisseStage {
    /// `F_0 = ∅`.
    pub fn empty(arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Precondition("arity must be at least 1".into()));
        }
        Ok(FraisseStage {
            arity,
            boundaries: vec![0],
            grounds: Vec::new(),
            provenance: Vec::new(),
            exceptions: BTreeMap::new(),
            pending: None,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Index of the last (possibly partial) stage.
    pub fn stage_index(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn atom_count(&self) -> usize {
        self.grounds.len()
    }

    pub fn is_partial(&self) -> bool {
        self.pending.is_some()
    }

    /// Atoms of `F_t` form the segment `0..boundary(t)`.
    pub fn boundary(&self, t: usize) -> usize {
        self.boundaries[t]
    }

    pub fn provenance(&self, a: u32) -> Result<Provenance> {
        self.provenance
            .get(a as usize)
            .copied()
            .ok_or(Error::UnknownAtom(a))
    }

    /// Stage at which atom `a` was created.
    pub fn created_at(&self, a: u32) -> Result<usize> {
        Ok(self.provenance(a)?.stage)
    }

    /// `Sel(x)` for a sorted set of atoms with more than `n` elements.
    pub fn sel(&self, x: &[u32]) -> Option<Vec<u32>> {
        if x.len() <= self.arity {
            return None;
        }
        Some(match self.exceptions.get(x) {
            Some(v) => v.clone(),
            None => x[x.len() - self.arity..].to_vec(),
        })
    }

    /// The embedding-determined entries, sorted.
    pub fn exceptions(&self) -> impl Iterator<Item = (&Vec<u32>, &Vec<u32>)> {
        self.exceptions.iter()
    }

    /// The full structure, for stages small enough to tabulate.
    pub fn to_structure(&self) -> Result<SelectionStructure> {
        let n = self.atom_count();
        SelectionStructure::from_fn(n, self.arity, |l| {
            let x: Vec<u32> = l.iter().map(|i| i as u32).collect();
            let v = self.sel(&x).expect("large set");
            SubsetCode::from_indices(v.iter().map(|&a| a as usize)).expect("small atoms")
        })
    }

    fn check_atoms(&self, atoms: &[u32]) -> Result<()> {
        match atoms.iter().find(|&&a| a as usize >= self.atom_count()) {
            Some(&a) => Err(Error::UnknownAtom(a)),
            None => Ok(()),
        }
    }
}

/// The ground of `a`: the domain of the embedding that created it.
pub fn ground(stage: &FraisseStage, a: u32) -> Result<SubsetCode> {
    let g = stage.grounds.get(a as usize).ok_or(Error::UnknownAtom(a))?;
    if let Some(&big) = g.iter().find(|&&x| x >= 64) {
        return Err(Error::DomainTooLarge(big as usize + 1));
    }
    SubsetCode::from_indices(g.iter().map(|&x| x as usize))
}

/// Isomorphism-type representatives on `size` points, sorted by rendering.
fn representatives(size: usize, arity: usize, cache: &mut HashMap<usize, Vec<SelectionStructure>>) -> Result<Vec<SelectionStructure>> {
    if let Some(r) = cache.get(&size) {
        return Ok(r.clone());
    }
    if size > arity + 2 {
        return Err(Error::BoundExceeded(format!(
            "representatives are capped at {} points",
            arity + 2
        )));
    }
    let mut seen = BTreeMap::new();
    for m in enumerate_structures(size, arity)? {
        let (canon, _) = canonical_form(&m)?;
        seen.entry(format!("{canon:?}")).or_insert(canon);
    }
    let reps: Vec<SelectionStructure> = seen.into_values().collect();
    cache.insert(size, reps.clone());
    Ok(reps)
}

/// Injective maps from `m` points into `0..=m`, as image tuples in lex order.
fn injections(m: usize) -> Vec<Vec<usize>> {
    fn go(m: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for v in 0..=m {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                go(m, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(m, &mut Vec::new(), &mut vec![false; m + 1], &mut out);
    out
}

/// Subsets of `0..count` with at most `n` elements, by size then lexicographically.
fn small_subsets(count: usize, n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for k in 1..=n.min(count) {
        combinations(&(0..count as u32).collect::<Vec<_>>(), k, &mut |c| out.push(c.to_vec()));
    }
    out
}

/// Calls `f` on every `k`-combination of `items`, lexicographically.
fn combinations(items: &[u32], k: usize, f: &mut dyn FnMut(&[u32])) {
    fn go(items: &[u32], k: usize, start: usize, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    go(items, k, 0, &mut Vec::new(), f);
}

/// One embedding `j_l : F_s|A_i → R_k`.
struct Embedding {
    ground_index: usize,
    ground: Vec<u32>,
    rep_index: usize,
    rep: SelectionStructure,
    image: Vec<usize>,
}

/// Enumerates the embeddings of stage `s` in the fixed order: grounds by
/// size then lexicographically, representatives by rendering, image tuples
/// lexicographically. Sets of at most `n` atoms carry no selection, so every
/// injection is an embedding.
fn embeddings(prev_atoms: usize, s: usize, arity: usize) -> Result<Vec<Embedding>> {
    let mut cache = HashMap::new();
    let mut out = Vec::new();
    for (gi, a) in small_subsets(prev_atoms, arity).into_iter().enumerate() {
        let m = a.len();
        if m + 1 > s + 1 {
            continue;
        }
        let reps = representatives(m + 1, arity, &mut cache)?;
        let maps = injections(m);
        for (ri, rep) in reps.iter().enumerate() {
            for image in &maps {
                out.push(Embedding {
                    ground_index: gi,
                    ground: a.clone(),
                    rep_index: ri,
                    rep: rep.clone(),
                    image: image.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Atoms stage `s + 1` would add on top of `prev`.
pub fn projected_growth(prev_atoms: usize, s: usize, arity: usize) -> u128 {
    let mut total: u128 = 0;
    for m in 0..=arity.min(s).min(prev_atoms) {
        let sets = crate::selection::binom(prev_atoms, m) as u128;
        let fact: u128 = (1..=m as u128 + 1).product();
        // one isomorphism type on at most n + 1 points
        total += sets * fact;
    }
    total
}

/// Builds the next stage, refusing when it would exceed [`STAGE_CAP`] atoms.
pub fn build_stage(prev: &FraisseStage, arity: usize) -> Result<FraisseStage> {
    match build_stage_capped(prev, arity, STAGE_CAP)? {
        StageOutcome::Complete(s) => Ok(s),
        StageOutcome::Partial(p) => Err(Error::BoundExceeded(format!(
            "stage {} needs {} atoms, cap is {STAGE_CAP}; {} built, resumable",
            p.stage_index(),
            p.boundary(p.stage_index() - 1) as u128
                + projected_growth(p.boundary(p.stage_index() - 1), p.stage_index() - 1, arity),
            p.atom_count()
        ))),
    }
}

/// Builds the next stage up to `cap` atoms in total.
pub fn build_stage_capped(prev: &FraisseStage, arity: usize, cap: usize) -> Result<StageOutcome> {
    if prev.arity != arity {
        return Err(Error::Precondition(format!(
            "stage has arity {}, asked for {arity}",
            prev.arity
        )));
    }
    if prev.is_partial() {
        return Err(Error::Precondition("previous stage is partial; resume it first".into()));
    }
    let mut next = prev.clone();
    next.boundaries.push(prev.atom_count());
    next.pending = Some(0);
    resume_stage(&next, cap)
}

/// Continues a partial stage up to `cap` atoms in total.
pub fn resume_stage(partial: &FraisseStage, cap: usize) -> Result<StageOutcome> {
    let Some(start) = partial.pending else {
        return Ok(StageOutcome::Complete(partial.clone()));
    };
    let s = partial.stage_index() - 1;
    let prev_atoms = partial.boundary(s);
    let arity = partial.arity;
    let embs = embeddings(prev_atoms, s, arity)?;
    let mut st = partial.clone();
    for (l, e) in embs.iter().enumerate().skip(start) {
        if st.atom_count() >= cap {
            st.pending = Some(l);
            *st.boundaries.last_mut().expect("stage") = st.atom_count();
            return Ok(StageOutcome::Partial(st));
        }
        let a = st.atom_count() as u32;
        // Point of R outside the image plays the new atom.
        let fresh = (0..=e.ground.len()).find(|p| !e.image.contains(p)).expect("one point free");
        if e.ground.len() == arity {
            let mut dom = e.ground.clone();
            dom.push(a);
            let mut to_rep: Vec<usize> = e.image.clone();
            to_rep.push(fresh);
            let full = SubsetCode::full(arity + 1);
            let chosen = e.rep.get(full).expect("total");
            let mut v: Vec<u32> = dom
                .iter()
                .zip(&to_rep)
                .filter(|(_, &p)| chosen.contains(p))
                .map(|(&x, _)| x)
                .collect();
            v.sort_unstable();
            st.exceptions.insert(dom, v);
        }
        st.grounds.push(e.ground.clone());
        st.provenance.push(Provenance {
            stage: s + 1,
            ground_index: e.ground_index,
            rep_index: e.rep_index,
            embedding: l,
        });
    }
    st.pending = None;
    *st.boundaries.last_mut().expect("stage") = st.atom_count();
    Ok(StageOutcome::Complete(st))
}

/// Builds `F_0, ..., F_stages` and returns the last.
pub fn build_stages(arity: usize, stages: usize) -> Result<FraisseStage> {
    let mut st = FraisseStage::empty(arity)?;
    for _ in 0..stages {
        st = build_stage(&st, arity)?;
    }
    Ok(st)
}

/// A one-point extension type over a ground `A`, up to isomorphism fixing `A`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionType {
    /// `|A| < n`: nothing to select, one type.
    Plain,
    /// `|A| = n`: `Sel(A ∪ {a})` leaves out the given atom of `A`.
    Excludes(u32),
    /// `|A| = n`: `Sel(A ∪ {a}) = A`.
    ExcludesNew,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionMiss {
    pub ground: Vec<u32>,
    pub missing: ExtensionType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub stage: usize,
    pub grounds_checked: usize,
    pub types_checked: usize,
    pub misses: Vec<ExtensionMiss>,
}

/// Whether a ground lies inside the horizon of the last stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtensionStatus {
    /// Created at the last stage, or too large for its representatives.
    Excluded,
    Checked(Vec<ExtensionType>),
}

fn extension_types(a: &[u32], arity: usize) -> Vec<ExtensionType> {
    if a.len() < arity {
        vec![ExtensionType::Plain]
    } else {
        a.iter()
            .map(|&x| ExtensionType::Excludes(x))
            .chain([ExtensionType::ExcludesNew])
            .collect()
    }
}

fn realized_type(stage: &FraisseStage, a: &[u32], b: u32) -> ExtensionType {
    if a.len() < stage.arity {
        return ExtensionType::Plain;
    }
    let mut x = a.to_vec();
    x.push(b);
    x.sort_unstable();
    let v = stage.sel(&x).expect("n + 1 atoms");
    match x.iter().find(|e| !v.contains(e)) {
        Some(&e) if e == b => ExtensionType::ExcludesNew,
        Some(&e) => ExtensionType::Excludes(e),
        None => unreachable!("selection drops one atom"),
    }
}

fn last_stage_grounds(stage: &FraisseStage) -> BTreeMap<Vec<u32>, Vec<u32>> {
    let s = stage.stage_index();
    let mut by_ground: BTreeMap<Vec<u32>, Vec<u32>> = BTreeMap::new();
    for b in stage.boundary(s - 1)..stage.atom_count() {
        by_ground.entry(stage.grounds[b].clone()).or_default().push(b as u32);
    }
    by_ground
}

/// Missing extension types over one ground, or `Excluded` outside the horizon.
pub fn extension_status(stage: &FraisseStage, a: &[u32]) -> Result<ExtensionStatus> {
    let s = stage.stage_index();
    if s < 1 {
        return Ok(ExtensionStatus::Excluded);
    }
    stage.check_atoms(a)?;
    let mut a = a.to_vec();
    a.sort_unstable();
    let old = stage.boundary(s - 1) as u32;
    if a.len() > stage.arity || a.len() > s - 1 || a.iter().any(|&x| x >= old) {
        return Ok(ExtensionStatus::Excluded);
    }
    let by_ground = last_stage_grounds(stage);
    Ok(ExtensionStatus::Checked(missing_types(stage, &a, by_ground.get(&a))))
}

fn missing_types(stage: &FraisseStage, a: &[u32], atoms: Option<&Vec<u32>>) -> Vec<ExtensionType> {
    let realized: BTreeSet<ExtensionType> = atoms
        .into_iter()
        .flatten()
        .map(|&b| realized_type(stage, a, b))
        .collect();
    extension_types(a, stage.arity)
        .into_iter()
        .filter(|t| !realized.contains(t))
        .collect()
}

/// Every ground of the previous stage inside the horizon, with every one-point
/// extension type over it, checked against the atoms of the last stage.
pub fn check_extension_property(stage: &FraisseStage) -> Result<ExtensionReport> {
    let s = stage.stage_index();
    if s < 2 {
        return Err(Error::Precondition("the extension check needs stage 2 or later".into()));
    }
    if stage.is_partial() {
        return Err(Error::Precondition("stage is partial".into()));
    }
    let by_ground = last_stage_grounds(stage);
    let mut report = ExtensionReport {
        stage: s,
        grounds_checked: 0,
        types_checked: 0,
        misses: Vec::new(),
    };
    for a in small_subsets(stage.boundary(s - 1), stage.arity.min(s - 1)) {
        report.grounds_checked += 1;
        report.types_checked += extension_types(&a, stage.arity).len();
        for t in missing_types(stage, &a, by_ground.get(&a)) {
            report.misses.push(ExtensionMiss {
                ground: a.clone(),
                missing: t,
            });
        }
    }
    Ok(report)
}

/// Checks `f ∪ {(a, b)}` on all sets of sizes `n + 1` and `n + 2` through `a`.
fn consistent(stage: &FraisseStage, dom: &[u32], img: &[u32], a: u32, b: u32) -> bool {
    let n = stage.arity;
    let idx: Vec<u32> = (0..dom.len() as u32).collect();
    let mut ok = true;
    for k in [n, n + 1] {
        if k > dom.len() {
            break;
        }
        combinations(&idx, k, &mut |c| {
            if !ok {
                return;
            }
            let mut pairs: Vec<(u32, u32)> = c.iter().map(|&i| (dom[i as usize], img[i as usize])).collect();
            pairs.push((a, b));
            ok = preserves(stage, &mut pairs);
        });
        if !ok {
            return false;
        }
    }
    ok
}

/// `f(Sel(X)) = Sel(f(X))` for the pairs `(x, f(x))` of one set `X`.
fn preserves(stage: &FraisseStage, pairs: &mut [(u32, u32)]) -> bool {
    pairs.sort_unstable();
    let x: Vec<u32> = pairs.iter().map(|p| p.0).collect();
    let mut fx: Vec<u32> = pairs.iter().map(|p| p.1).collect();
    fx.sort_unstable();
    let (Some(sx), Some(sfx)) = (stage.sel(&x), stage.sel(&fx)) else {
        return true;
    };
    let mut mapped: Vec<u32> = sx
        .iter()
        .map(|v| pairs.iter().find(|p| p.0 == *v).expect("in X").1)
        .collect();
    mapped.sort_unstable();
    mapped == sfx
}

/// Whether `map` is an isomorphism between the induced substructures.
pub fn is_partial_isomorphism(stage: &FraisseStage, map: &[(u32, u32)]) -> Result<bool> {
    let dom: Vec<u32> = map.iter().map(|p| p.0).collect();
    let img: Vec<u32> = map.iter().map(|p| p.1).collect();
    stage.check_atoms(&dom)?;
    stage.check_atoms(&img)?;
    let distinct = |v: &[u32]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
    if !distinct(&dom) || !distinct(&img) {
        return Ok(false);
    }
    let n = stage.arity;
    let idx: Vec<u32> = (0..map.len() as u32).collect();
    let mut ok = true;
    for k in [n + 1, n + 2] {
        combinations(&idx, k, &mut |c| {
            if ok {
                let mut pairs: Vec<(u32, u32)> = c.iter().map(|&i| map[i as usize]).collect();
                ok = preserves(stage, &mut pairs);
            }
        });
    }
    Ok(ok)
}

/// Result of a bounded back-and-forth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extension {
    pub map: BTreeMap<u32, u32>,
    /// Completed forth-and-back rounds.
    pub rounds: usize,
    /// A required image or preimage does not exist inside the stage.
    pub horizon_exhausted: bool,
    /// The map covers the whole stage.
    pub total: bool,
}

/// Alternately maps the least unmatched atom forth and back, taking the least
/// partner that keeps the map an isomorphism, for at most `rounds` rounds.
pub fn extend_isomorphism(stage: &FraisseStage, iso: &[(u32, u32)], rounds: usize) -> Result<Extension> {
    if !is_partial_isomorphism(stage, iso)? {
        return Err(Error::NotIsomorphism(format!("{iso:?} does not preserve the selection")));
    }
    let count = stage.atom_count() as u32;
    let mut dom: Vec<u32> = iso.iter().map(|p| p.0).collect();
    let mut img: Vec<u32> = iso.iter().map(|p| p.1).collect();
    let mut done = 0;
    let mut exhausted = false;
    'rounds: while done < rounds {
        for forth in [true, false] {
            let (from, to) = if forth { (&dom, &img) } else { (&img, &dom) };
            let Some(x) = (0..count).find(|v| !from.contains(v)) else {
                break 'rounds;
            };
            let partner = (0..count).filter(|v| !to.contains(v)).find(|&y| {
                if forth {
                    consistent(stage, &dom, &img, x, y)
                } else {
                    consistent(stage, &dom, &img, y, x)
                }
            });
            match partner {
                Some(y) if forth => {
                    dom.push(x);
                    img.push(y);
                }
                Some(y) => {
                    dom.push(y);
                    img.push(x);
                }
                None => {
                    exhausted = true;
                    break 'rounds;
                }
            }
        }
        done += 1;
    }
    let total = dom.len() == count as usize;
    Ok(Extension {
        map: dom.into_iter().zip(img).collect(),
        rounds: done,
        horizon_exhausted: exhausted,
        total,
    })
}

/// Counts of a homogeneity smoke run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub trials: usize,
    pub extended: usize,
    pub horizon_exhausted: usize,
}

impl HomogeneityReport {
    pub fn exhausted_rate(&self) -> f64 {
        self.horizon_exhausted as f64 / self.trials.max(1) as f64
    }
}

/// Random isomorphisms between submodels of at most `max_size` atoms, each
/// pushed through one back-and-forth round.
pub fn homogeneity_smoke(stage: &FraisseStage, trials: usize, max_size: usize, rng: &mut impl Rng) -> Result<HomogeneityReport> {
    let atoms: Vec<u32> = (0..stage.atom_count() as u32).collect();
    let mut report = HomogeneityReport {
        trials: 0,
        extended: 0,
        horizon_exhausted: 0,
    };
    let max_size = max_size.min(atoms.len());
    if max_size == 0 {
        return Ok(report);
    }
    while report.trials < trials {
        let k = rng.gen_range(1..=max_size);
        let x: Vec<u32> = atoms.choose_multiple(rng, k).copied().collect();
        let y: Vec<u32> = atoms.choose_multiple(rng, k).copied().collect();
        let map: Vec<(u32, u32)> = x.into_iter().zip(y).collect();
        if !is_partial_isomorphism(stage, &map)? {
            continue;
        }
        report.trials += 1;
        let ext = extend_isomorphism(stage, &map, 1)?;
        if ext.rounds >= 1 || ext.total {
            report.extended += 1;
        }
        if ext.horizon_exhausted {
            report.horizon_exhausted += 1;
        }
    }
    Ok(report)
}

/// A finite instance of choosing by a reference set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcfDemo {
    /// `R = R' ∪ {r_0}`, sorted.
    pub reference: Vec<u32>,
    pub r0: u32,
    /// The member atom singled out by `R`.
    pub distinguished: u32,
    /// Atoms `b_0` for which swapping with `a_0` is an isomorphism on `S ∪ R ∪ A`.
    pub copies: Vec<u32>,
}

/// Searches the stage for `R' (n - 1 atoms)` and `r_0` such that
/// `Sel(R' ∪ {r_0, a}) = R' ∪ {r_0}` for every `a ∈ A ∖ {a_0}` while
/// `Sel(R' ∪ {r_0, a_0}) = R' ∪ {a_0}`, together with copies of `a_0` over
/// `S ∪ R ∪ A`.
pub fn acf_demo(stage: &FraisseStage, member: &[u32], support: &[u32]) -> Result<AcfDemo> {
    let n = stage.arity;
    stage.check_atoms(member)?;
    stage.check_atoms(support)?;
    if member.is_empty() {
        return Err(Error::Precondition("member is empty".into()));
    }
    if member.iter().any(|a| support.contains(a)) {
        return Err(Error::Precondition("member meets the declared support".into()));
    }
    let mut member = member.to_vec();
    member.sort_unstable();
    let taken: BTreeSet<u32> = member.iter().chain(support).copied().collect();
    let free: Vec<u32> = (0..stage.atom_count() as u32).filter(|a| !taken.contains(a)).collect();
    let with = |r: &[u32], extra: &[u32]| -> Vec<u32> {
        let mut v: Vec<u32> = r.iter().chain(extra).copied().collect();
        v.sort_unstable();
        v
    };
    let mut found: Option<AcfDemo> = None;
    for &a0 in &member {
        combinations(&free, n - 1, &mut |rp| {
            if found.is_some() {
                return;
            }
            for &r0 in free.iter().filter(|r| !rp.contains(r)) {
                let r = with(rp, &[r0]);
                let others_ok = member
                    .iter()
                    .filter(|&&a| a != a0)
                    .all(|&a| stage.sel(&with(&r, &[a])).as_deref() == Some(&r[..]));
                if !others_ok || stage.sel(&with(&r, &[a0])) != Some(with(rp, &[a0])) {
                    continue;
                }
                let base: Vec<u32> = support.iter().chain(&r).chain(&member).copied().collect();
                let copies: Vec<u32> = free
                    .iter()
                    .copied()
                    .filter(|b| !r.contains(b))
                    .filter(|&b| {
                        let map: Vec<(u32, u32)> = base
                            .iter()
                            .map(|&x| (x, if x == a0 { b } else { x }))
                            .collect();
                        is_partial_isomorphism(stage, &map).unwrap_or(false)
                    })
                    .collect();
                if !copies.is_empty() {
                    found = Some(AcfDemo {
                        reference: r,
                        r0,
                        distinguished: a0,
                        copies,
                    });
                    return;
                }
            }
        });
        if found.is_some() {
            break;
        }
    }
    found.ok_or_else(|| {
        Error::NotRealizable(format!(
            "stage {} with {} atoms has no reference set for {member:?}",
            stage.stage_index(),
            stage.atom_count()
        ))
    })
}

fn render(v: &[u32]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn parse_set(s: &str) -> Result<Vec<u32>> {
    let inner = s
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| Error::Parse(format!("expected {{..}}, got {s}")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad atom {t}"))))
        .collect()
}

/// Result of [`scan_sel`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelScan {
    pub stage: usize,
    pub exceptions_checked: usize,
    /// Atoms of the largest stage prefix scanned set by set.
    pub exhaustive_prefix: usize,
    pub sets_checked: u64,
    pub violations: Vec<String>,
}

/// Checks that `Sel` is total with `n`-subset values, that the stored entries
/// are exactly the sets `ground(a) ∪ {a}` with `|ground(a)| = n`, and that all
/// other `(n+1)`- and `(n+2)`-sets take their `n` largest atoms. The set-by-set
/// part covers the largest stage prefix with at most `set_budget` such sets.
pub fn scan_sel(stage: &FraisseStage, set_budget: u64) -> Result<SelScan> {
    let n = stage.arity;
    let mut violations = Vec::new();
    for (x, v) in &stage.exceptions {
        let &a = x.last().expect("non-empty key");
        let ok = x.len() == n + 1
            && x.windows(2).all(|w| w[0] < w[1])
            && v.len() == n
            && v.iter().all(|e| x.contains(e))
            && stage.grounds.get(a as usize).is_some_and(|g| g[..] == x[..n]);
        if !ok {
            violations.push(format!("entry {x:?} -> {v:?} is not a one-point extension value"));
        }
    }
    for (a, g) in stage.grounds.iter().enumerate() {
        if g.len() == n {
            let mut x = g.clone();
            x.push(a as u32);
            if !stage.exceptions.contains_key(&x) {
                violations.push(format!("atom {a} lacks its entry on {x:?}"));
            }
        }
    }
    let sets = |m: usize| crate::selection::binom(m, n + 1) + crate::selection::binom(m, n + 2);
    let prefix = (0..=stage.stage_index())
        .map(|t| stage.boundary(t))
        .filter(|&m| sets(m) <= set_budget)
        .max()
        .unwrap_or(0);
    let atoms: Vec<u32> = (0..prefix as u32).collect();
    let mut checked = 0u64;
    for k in [n + 1, n + 2] {
        combinations(&atoms, k, &mut |x| {
            checked += 1;
            let v = match stage.sel(x) {
                Some(v) => v,
                None => {
                    violations.push(format!("Sel undefined on {x:?}"));
                    return;
                }
            };
            let subset = v.len() == n && v.iter().all(|e| x.contains(e));
            let rule = stage.exceptions.contains_key(x) || v[..] == x[k - n..];
            if !subset || !rule {
                violations.push(format!("Sel{x:?} = {v:?}"));
            }
        });
    }
    Ok(SelScan {
        stage: stage.stage_index(),
        exceptions_checked: stage.exceptions.len(),
        exhaustive_prefix: prefix,
        sets_checked: checked,
        violations,
    })
}

/// Text dump: header, one line per atom, the explicit selection entries.
/// All other sets select their `n` largest atoms.
pub fn dump_stage(stage: &FraisseStage) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fraisse-stage 1");
    let _ = writeln!(out, "arity {}", stage.arity);
    let b: Vec<String> = stage.boundaries.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "boundaries {}", b.join(" "));
    match stage.pending {
        Some(l) => {
            let _ = writeln!(out, "pending {l}");
        }
        None => {
            let _ = writeln!(out, "pending -");
        }
    }
    let _ = writeln!(out, "default n-largest");
    for (a, (g, p)) in stage.grounds.iter().zip(&stage.provenance).enumerate() {
        let _ = writeln!(
            out,
            "atom {a} ground {} stage {} from {} {} {}",
            render(g),
            p.stage,
            p.ground_index,
            p.rep_index,
            p.embedding
        );
    }
    for (x, v) in &stage.exceptions {
        let _ = writeln!(out, "sel {} {}", render(x), render(v));
    }
    out
}

/// Inverse of [`dump_stage`].
pub fn load_stage(text: &str) -> Result<FraisseStage> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")))?;
        Ok(line.split_whitespace().map(str::to_string).collect())
    };
    let header = next("header")?;
    if header != ["fraisse-stage", "1"] {
        return Err(Error::Parse(format!("bad header {header:?}")));
    }
    let num = |t: &str| -> Result<usize> { t.parse().map_err(|_| Error::Parse(format!("bad number {t}"))) };
    let arity_line = next("arity")?;
    let arity = num(arity_line.get(1).map(String::as_str).unwrap_or(""))?;
    let mut stage = FraisseStage::empty(arity)?;
    let bl = next("boundaries")?;
    stage.boundaries = bl[1..].iter().map(|t| num(t)).collect::<Result<_>>()?;
    if stage.boundaries.first() != Some(&0) {
        return Err(Error::Parse("boundaries must start at 0".into()));
    }
    let pl = next("pending")?;
    stage.pending = match pl.get(1).map(String::as_str) {
        Some("-") => None,
        Some(t) => Some(num(t)?),
        None => return Err(Error::Parse("bad pending line".into())),
    };
    if next("default")? != ["default", "n-largest"] {
        return Err(Error::Parse("unknown default rule".into()));
    }
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["atom", a, "ground", g, "stage", s, "from", i, k, l] => {
                if num(a)? != stage.grounds.len() {
                    return Err(Error::Parse(format!("atom {a} out of order")));
                }
                stage.grounds.push(parse_set(g)?);
                stage.provenance.push(Provenance {
                    stage: num(s)?,
                    ground_index: num(i)?,
                    rep_index: num(k)?,
                    embedding: num(l)?,
                });
            }
            ["sel", x, v] => {
                let (x, v) = (parse_set(x)?, parse_set(v)?);
                if v.len() != arity || v.iter().any(|e| !x.contains(e)) {
                    return Err(Error::Parse(format!("bad selection entry {line}")));
                }
                stage.exceptions.insert(x, v);
            }
            _ => return Err(Error::Parse(format!("unrecognized line: {line}"))),
        }
    }
    if stage.boundaries.last() != Some(&stage.grounds.len()) {
        return Err(Error::Parse("atom count disagrees with boundaries".into()));
    }
    Ok(stage)
}
