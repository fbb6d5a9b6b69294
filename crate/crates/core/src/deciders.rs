//! Bounded verdicts for local choice implications, with witness certificates.
//!
//! A finite group `G` acting without a common fixed point on `m` points, together
//! with a `G`-equivariant arity-`n` selection, is the local obstruction to deriving
//! a choice on `m`-sets from `n`-selections: any choice definable from the
//! selection would be `G`-invariant, so it would be a fixed point. The deciders
//! search such witnesses up to a bound; finding none is reported as
//! `holds_at_bound`, never as a proof.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canon::{automorphism_group, canonical_form};
use crate::equivariance::{build_equivariant_sel, equivariant_sel_exists, OrbitCertificate};
use crate::error::{Error, Result};
use crate::group::{group_closure_with, ClosureLimits, PermGroup};
use crate::perm::Perm;
use crate::selection::{SelectionStructure, MAX_TABLE_DOMAIN};
use crate::subgroups::{cyclic_subgroups, enumerate_subgroups, SubgroupFilter, MAX_ALL_DEGREE};
use crate::subset::SubsetCode;

pub const SCHEMA_VERSION: &str = "1";
/// Largest `m` for complete-mode rc decisions.
pub const MAX_RC_COMPLETE: usize = 8;
/// Largest `m` for cyclic-mode rc decisions.
pub const MAX_RC_CYCLIC: usize = 12;
/// Largest domain bound for complete-mode nrc decisions.
pub const MAX_NRC_COMPLETE: usize = 16;
/// Largest domain bound for cyclic-mode nrc decisions.
pub const MAX_NRC_CYCLIC: usize = 24;

const SUPPORT_TEMPLATE: &str = "the witness domain is placed on atoms disjoint from any given finite support; \
the selection may be fixed arbitrarily on sets meeting both the witness and the rest, so only the witness domain is constrained";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Complete,
    CyclicOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "complete" => Ok(Mode::Complete),
            "cyclic" | "cyclic_only" => Ok(Mode::CyclicOnly),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Complete => "complete",
            Mode::CyclicOnly => "cyclic_only",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    HoldsAtBound,
    Fails,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictKind::HoldsAtBound => "holds_at_bound",
            VerdictKind::Fails => "fails",
        })
    }
}

/// What a certificate claims to refute.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Claim {
    RcFailure { n: usize, m: usize },
    NrcFailure { n: usize, k: usize },
    ZooFailure { model: String, principle: String, n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SelTable {
    Explicit(Vec<(SubsetCode, SubsetCode)>),
    OrbitGenerated { orbit_generated: OrbitCertificate },
}

/// A self-contained witness: a group, an equivariant selection and a target set
/// on which the group leaves no invariant subset of the claimed size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: String,
    pub claim: Claim,
    pub domain_size: usize,
    pub group_generators: Vec<String>,
    pub sel_table: SelTable,
    pub target_set: SubsetCode,
    pub support_template: String,
}

impl Certificate {
    pub fn new(claim: Claim, group: &PermGroup, sel_table: SelTable, target_set: SubsetCode) -> Certificate {
        Certificate {
            schema_version: SCHEMA_VERSION.to_string(),
            claim,
            domain_size: group.degree(),
            group_generators: group.generators().iter().map(|g| g.to_string()).collect(),
            sel_table,
            target_set,
            support_template: SUPPORT_TEMPLATE.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificates serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Certificate> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// One candidate group looked at by a decider.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Examined {
    pub domain_size: usize,
    pub order: usize,
    pub generators: Vec<String>,
    pub witness: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Option<Certificate>,
    pub bound: usize,
    pub mode: Mode,
    /// Candidates in scan order, up to and including the witness.
    pub examined: Vec<Examined>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.kind == VerdictKind::HoldsAtBound
    }
}

fn examined(g: &PermGroup, witness: bool) -> Examined {
    Examined {
        domain_size: g.degree(),
        order: g.order(),
        generators: g.generators().iter().map(|p| p.to_string()).collect(),
        witness,
    }
}

fn explicit(m: &SelectionStructure) -> SelTable {
    SelTable::Explicit(m.entries().collect())
}

/// Scans `candidates` in order (in parallel) and returns the index of the first
/// one accepted by `test`, with the examined log.
fn first_witness(candidates: &[PermGroup], test: impl Fn(&PermGroup) -> Result<bool> + Sync) -> Result<(Option<usize>, Vec<Examined>)> {
    let results: Vec<bool> = candidates.par_iter().map(&test).collect::<Result<_>>()?;
    let hit = results.iter().position(|&b| b);
    let upto = hit.map_or(candidates.len(), |i| i + 1);
    let log = candidates[..upto].iter().zip(&results).map(|(g, &b)| examined(g, b)).collect();
    Ok((hit, log))
}

/// Local test of "arity-`n` selections give choice on `m`-sets": fails iff some
/// fixed-point-free group of degree `m` admits an equivariant arity-`n` selection.
pub fn decide_local_rc(n: usize, m: usize, mode: Mode) -> Result<Verdict> {
    if n == 0 || m < 2 {
        return Err(Error::Precondition("need n >= 1 and m >= 2".into()));
    }
    let cap = match mode {
        Mode::Complete => MAX_RC_COMPLETE,
        Mode::CyclicOnly => MAX_RC_CYCLIC,
    };
    if m > cap {
        return Err(Error::BoundExceeded(format!("{mode} mode allows m <= {cap}")));
    }
    let claim = Claim::RcFailure { n, m };
    let full = SubsetCode::full(m);
    if m <= n {
        // no subset exceeds the arity, so the empty table is equivariant under the full cycle
        let cycle = Perm::from_images((1..m).chain([0]).collect())?;
        let g = group_closure_with(m, &[cycle], ClosureLimits { max_degree: MAX_RC_CYCLIC, max_elements: 1_000_000 })?;
        let cert = Certificate::new(claim, &g, SelTable::Explicit(Vec::new()), full);
        return Ok(Verdict { kind: VerdictKind::Fails, witness: Some(cert), bound: m, mode, examined: vec![examined(&g, true)] });
    }
    let candidates = match mode {
        Mode::Complete => enumerate_subgroups(m, SubgroupFilter::FixedPointFree)?,
        Mode::CyclicOnly => cyclic_subgroups(m, true)?,
    };
    let (hit, log) = first_witness(&candidates, |g| Ok(equivariant_sel_exists(g, n)?.0))?;
    let witness = match hit {
        Some(i) => {
            let g = &candidates[i];
            let sel = build_equivariant_sel(g, n)?;
            Some(Certificate::new(claim, g, explicit(&sel), full))
        }
        None => None,
    };
    let kind = if witness.is_some() { VerdictKind::Fails } else { VerdictKind::HoldsAtBound };
    Ok(Verdict { kind, witness, bound: m, mode, examined: log })
}

/// Local test of "arity-`m` selections give arity-`k` selections": fails iff on
/// some domain of size `d <= bound` a group admits an equivariant arity-`m`
/// selection but no equivariant arity-`k` one.
///
/// Complete mode takes every subgroup class for `d <= 8` and cyclic groups of
/// every cycle type beyond that; cyclic mode takes cyclic groups throughout.
pub fn decide_local_nrc(m: usize, k: usize, bound: usize, mode: Mode) -> Result<Verdict> {
    if m == 0 || k == 0 {
        return Err(Error::Precondition("arities must be at least 1".into()));
    }
    let cap = match mode {
        Mode::Complete => MAX_NRC_COMPLETE,
        Mode::CyclicOnly => MAX_NRC_CYCLIC,
    };
    if bound > cap {
        return Err(Error::BoundExceeded(format!("{mode} mode allows domain bound <= {cap}")));
    }
    let mut log = Vec::new();
    for d in (m + 1)..=bound {
        if d <= k {
            // arity-k selections are vacuous here
            continue;
        }
        let candidates = if mode == Mode::Complete && d <= MAX_ALL_DEGREE {
            enumerate_subgroups(d, SubgroupFilter::All)?
        } else {
            cyclic_subgroups(d, false)?
        };
        let (hit, part) = first_witness(&candidates, |g| {
            Ok(equivariant_sel_exists(g, m)?.0 && !equivariant_sel_exists(g, k)?.0)
        })?;
        log.extend(part);
        if let Some(i) = hit {
            let g = &candidates[i];
            let target = equivariant_sel_exists(g, k)?.1.failing().expect("k-selection failed");
            let table = if d <= MAX_TABLE_DOMAIN {
                explicit(&build_equivariant_sel(g, m)?)
            } else {
                SelTable::OrbitGenerated { orbit_generated: equivariant_sel_exists(g, m)?.1 }
            };
            let cert = Certificate::new(Claim::NrcFailure { n: m, k }, g, table, target);
            return Ok(Verdict { kind: VerdictKind::Fails, witness: Some(cert), bound, mode, examined: log });
        }
    }
    Ok(Verdict { kind: VerdictKind::HoldsAtBound, witness: None, bound, mode, examined: log })
}

/// rc verdicts for each `m` in the range, in order.
pub fn implication_matrix(n: usize, ms: std::ops::RangeInclusive<usize>, mode: Mode) -> Result<Vec<(usize, Verdict)>> {
    let ms: Vec<usize> = ms.collect();
    ms.par_iter().map(|&m| Ok((m, decide_local_rc(n, m, mode)?))).collect()
}

/// A point fixed by every automorphism of `m`, picked so that relabeling the
/// structure relabels the answer: `choose(π·m) = π(choose(m))`.
pub fn equivariant_choose(m: &SelectionStructure) -> Result<Option<usize>> {
    let (kappa, pi) = canonical_form(m)?;
    let aut = automorphism_group(&kappa)?;
    let fixed = aut.fixed_points();
    Ok(fixed.first().map(|c| pi.inverse().apply(c)))
}

/// Outcome of the case analysis of an arity-4 selection on a 7-set `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SevenReport {
    /// Some point can be singled out without further analysis.
    NaturalChoice { reason: String },
    /// One of the four residual configurations. `labels` lists the points playing
    /// `a, b, c, d`; `involutions` are the non-identity involutions of `f(S)`
    /// preserving `g`, and `preserving_order` is the order of the whole group
    /// preserving `g`. `pick` is the double transposition used to finish, and
    /// `conclusion` is `g(g(P) ∪ g(Q))` for its two pairs `P, Q`.
    Terminal {
        case: usize,
        labels: [usize; 4],
        involutions: Vec<Perm>,
        preserving_order: usize,
        pick: Perm,
        conclusion: SubsetCode,
    },
}

// g(d), g(c), g(b), g(a) over labels a=0, b=1, c=2, d=3
const SEVEN_CASES: [[[usize; 2]; 4]; 4] = [
    [[0, 1], [0, 1], [0, 2], [1, 3]],
    [[0, 1], [0, 1], [2, 3], [2, 3]],
    [[0, 1], [0, 3], [2, 3], [1, 2]],
    [[0, 1], [0, 3], [0, 3], [2, 3]],
];
// the double transposition picked in each case, as pairs of labels
const SEVEN_PICKS: [[[usize; 2]; 2]; 4] = [
    [[0, 1], [2, 3]],
    [[0, 1], [2, 3]],
    [[0, 2], [1, 3]],
    [[0, 3], [1, 2]],
];

/// Case analysis of an arity-4 selection `sel` around a 7-set `s`, reading
/// `sel` on `s` and on the subsets missing one or two points.
///
/// With `F = sel(s)`, `g(T) = (s∖T) ∖ sel(s∖T)`. If some `g(l)` for `l ∈ F`
/// reaches outside `F`, or `g` has no matching residual shape, a point is
/// determined directly.
pub fn classify_seven(s: SubsetCode, sel: impl Fn(SubsetCode) -> Option<SubsetCode>) -> Result<SevenReport> {
    if s.len() != 7 {
        return Err(Error::Malformed(format!("expected a 7-set, got {{{s}}}")));
    }
    let get = |t: SubsetCode| -> Result<SubsetCode> {
        let v = sel(t).ok_or_else(|| Error::Malformed(format!("no entry for {{{t}}}")))?;
        if v.len() != 4 || !v.is_subset_of(t) {
            return Err(Error::Malformed(format!("entry for {{{t}}} is not a 4-subset")));
        }
        Ok(v)
    };
    let f = get(s)?;
    let g = |t: SubsetCode| -> Result<SubsetCode> {
        let rest = s.difference(t);
        Ok(rest.difference(get(rest)?))
    };
    let pts = f.to_vec();
    let mut g1 = Vec::new();
    for &l in &pts {
        let v = g(SubsetCode::singleton(l))?;
        if !v.is_subset_of(f) {
            return Ok(SevenReport::NaturalChoice { reason: format!("g({l}) = {{{v}}} meets the unselected points") });
        }
        g1.push((l, v));
    }
    let g_of = |l: usize| g1.iter().find(|(x, _)| *x == l).unwrap().1;
    // whole group of permutations of F commuting with g
    let mut preserving: Vec<[usize; 4]> = Vec::new();
    for perm in permutations4() {
        let map = |x: usize| pts[perm[pts.iter().position(|&p| p == x).unwrap()]];
        let ok = pts.iter().all(|&l| {
            let image = SubsetCode(g_of(l).iter().fold(0, |acc, x| acc | 1 << map(x)));
            image == g_of(map(l))
        });
        if ok {
            preserving.push(perm);
        }
    }
    for labels in permutations4() {
        let lab: [usize; 4] = labels.map(|i| pts[i]);
        let pair = |p: [usize; 2]| SubsetCode::singleton(lab[p[0]]).union(SubsetCode::singleton(lab[p[1]]));
        for (ci, case) in SEVEN_CASES.iter().enumerate() {
            // case rows are g(d), g(c), g(b), g(a)
            let matches = (0..4).all(|r| g_of(lab[3 - r]) == pair(case[r]));
            if !matches {
                continue;
            }
            let degree = s.span();
            let as_perm = |perm: &[usize; 4]| {
                let mut images: Vec<usize> = (0..degree).collect();
                for (i, &p) in pts.iter().enumerate() {
                    images[p] = pts[perm[i]];
                }
                Perm::from_images(images).unwrap()
            };
            let involutions: Vec<Perm> = preserving
                .iter()
                .map(as_perm)
                .filter(|p| !p.is_identity() && p.order() == 2)
                .collect();
            let [p, q] = SEVEN_PICKS[ci].map(pair);
            let mut pick_images: Vec<usize> = (0..degree).collect();
            for pr in [p, q] {
                let v = pr.to_vec();
                pick_images[v[0]] = v[1];
                pick_images[v[1]] = v[0];
            }
            let conclusion = g(g(p)?.union(g(q)?))?;
            return Ok(SevenReport::Terminal {
                case: ci + 1,
                labels: lab,
                involutions,
                preserving_order: preserving.len(),
                pick: Perm::from_images(pick_images)?,
                conclusion,
            });
        }
    }
    Ok(SevenReport::NaturalChoice { reason: "the symmetries of g fix a point of f(S)".into() })
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (1u8 << a | 1 << b | 1 << c | 1 << d) == 0b1111 {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::enumerate_structures;

    fn cycles(c: &Certificate) -> Vec<&str> {
        c.group_generators.iter().map(|s| s.as_str()).collect()
    }

    #[test]
    fn rc_examples() {
        assert!(decide_local_rc(4, 7, Mode::Complete).unwrap().holds());
        let v = decide_local_rc(4, 6, Mode::Complete).unwrap();
        assert_eq!(v.kind, VerdictKind::Fails);
        let w = v.witness.unwrap();
        let g = group_closure_with(6, &w.group_generators.iter().map(|s| Perm::parse_cycles(6, s).unwrap()).collect::<Vec<_>>(), ClosureLimits::default()).unwrap();
        assert_eq!(g.order(), 2, "{:?}", cycles(&w));
        assert_eq!(g.elements()[1].cycle_type(), vec![2, 2, 2]);
        let v = decide_local_rc(4, 3, Mode::Complete).unwrap();
        let w = v.witness.unwrap();
        assert_eq!(cycles(&w), vec!["(0 1 2)"]);
        assert_eq!(w.sel_table, SelTable::Explicit(vec![]));
    }

    #[test]
    fn rc_examined_lists_every_class() {
        let v = decide_local_rc(4, 7, Mode::Complete).unwrap();
        let classes = enumerate_subgroups(7, SubgroupFilter::FixedPointFree).unwrap();
        assert_eq!(v.examined.len(), classes.len());
        assert!(v.examined.iter().all(|e| !e.witness));
    }

    #[test]
    fn rc_matches_brute_force_at_two_four() {
        let verdict = decide_local_rc(2, 4, Mode::Complete).unwrap();
        let brute = enumerate_structures(4, 2)
            .unwrap()
            .any(|m| automorphism_group(&m).unwrap().is_fixed_point_free());
        assert_eq!(verdict.kind == VerdictKind::Fails, brute);
    }

    #[test]
    fn vacuous_when_m_at_most_n() {
        for n in 2..6 {
            for m in 2..=n {
                let v = decide_local_rc(n, m, Mode::Complete).unwrap();
                assert_eq!(v.kind, VerdictKind::Fails);
                assert_eq!(v.witness.unwrap().sel_table, SelTable::Explicit(vec![]));
            }
        }
    }

    #[test]
    fn cyclic_failure_implies_complete_failure() {
        for n in 2..=4 {
            for m in 3..=7 {
                let c = decide_local_rc(n, m, Mode::CyclicOnly).unwrap();
                if !c.holds() {
                    assert!(!decide_local_rc(n, m, Mode::Complete).unwrap().holds(), "n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn nrc_examples() {
        let v = decide_local_nrc(2, 3, 8, Mode::Complete).unwrap();
        let w = v.witness.unwrap();
        assert_eq!(w.domain_size, 4);
        assert_eq!(w.target_set, SubsetCode::full(4));
        assert!(decide_local_nrc(2, 4, 8, Mode::Complete).unwrap().holds());
        assert!(!decide_local_nrc(2, 1, 6, Mode::Complete).unwrap().holds());
    }

    #[test]
    fn matrix_is_ordered() {
        let rows = implication_matrix(2, 3..=5, Mode::Complete).unwrap();
        let kinds: Vec<bool> = rows.iter().map(|(_, v)| v.holds()).collect();
        assert_eq!(kinds, vec![true, false, true]);
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![3, 4, 5]);
    }

    #[test]
    fn certificate_json_round_trip() {
        let w = decide_local_rc(4, 6, Mode::Complete).unwrap().witness.unwrap();
        let text = w.to_json();
        let back = Certificate::from_json(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"kind\": \"rc_failure\""));
    }

    fn seven_table(rows: [[usize; 2]; 4]) -> impl Fn(SubsetCode) -> Option<SubsetCode> {
        // points: a=0 b=1 c=2 d=3 x=4 y=5 z=6; rows give g(d), g(c), g(b), g(a)
        move |t: SubsetCode| {
            let s = SubsetCode::full(7);
            let f = SubsetCode::full(4);
            if t == s {
                return Some(f);
            }
            let missing = s.difference(t);
            if missing.len() == 1 {
                let l = missing.first().unwrap();
                if l < 4 {
                    let r = rows[3 - l];
                    let g = SubsetCode::singleton(r[0]).union(SubsetCode::singleton(r[1]));
                    return Some(t.difference(g));
                }
            }
            Some(SubsetCode::from_indices(t.iter().take(4)).unwrap())
        }
    }

    #[test]
    fn seven_case_one() {
        let r = classify_seven(SubsetCode::full(7), seven_table([[0, 1], [0, 1], [0, 2], [1, 3]])).unwrap();
        let SevenReport::Terminal { case, involutions, preserving_order, .. } = r else { panic!("{r:?}") };
        assert_eq!(case, 1);
        let names: Vec<String> = involutions.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, vec!["(0 1)(2 3)"]);
        assert_eq!(preserving_order, 2);
    }

    #[test]
    fn seven_case_two() {
        let r = classify_seven(SubsetCode::full(7), seven_table([[0, 1], [0, 1], [2, 3], [2, 3]])).unwrap();
        let SevenReport::Terminal { case, involutions, preserving_order, pick, .. } = r else { panic!("{r:?}") };
        assert_eq!(case, 2);
        let mut names: Vec<String> = involutions.iter().map(|p| p.to_string()).collect();
        names.sort();
        assert_eq!(names, vec!["(0 1)", "(0 1)(2 3)", "(0 2)(1 3)", "(0 3)(1 2)", "(2 3)"]);
        // the two 4-cycles also preserve g
        assert_eq!(preserving_order, 8);
        assert_eq!(pick.to_string(), "(0 1)(2 3)");
    }

    #[test]
    fn seven_natural_choice() {
        // g(d) = {a, x}
        let base = seven_table([[0, 1], [0, 1], [0, 2], [1, 3]]);
        let sel = move |t: SubsetCode| {
            if t == SubsetCode::from_indices([0, 1, 2, 4, 5, 6]).unwrap() {
                return SubsetCode::from_indices([1, 2, 5, 6]).ok();
            }
            base(t)
        };
        assert!(matches!(classify_seven(SubsetCode::full(7), sel).unwrap(), SevenReport::NaturalChoice { .. }));
        assert!(classify_seven(SubsetCode::full(6), |_| None).is_err());
    }

    #[test]
    fn choose_is_equivariant() {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // a rigid structure: least table twisted on one set
        let m = SelectionStructure::least(5, 2).unwrap();
        let c = equivariant_choose(&m).unwrap();
        assert!(c.is_some());
        for _ in 0..100 {
            let mut images: Vec<usize> = (0..5).collect();
            images.shuffle(&mut rng);
            let pi = Perm::from_images(images).unwrap();
            assert_eq!(equivariant_choose(&m.relabel(&pi)).unwrap(), c.map(|x| pi.apply(x)));
        }
        let fpf = crate::group::group_closure(4, &[Perm::parse_cycles(4, "(0 1)(2 3)").unwrap()]).unwrap();
        let sym = build_equivariant_sel(&fpf, 2).unwrap();
        assert_eq!(equivariant_choose(&sym).unwrap(), None);
    }

    #[test]
    fn arity_four_on_seven_points_always_chooses() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = SelectionStructure::from_fn(7, 4, |l| {
                let pts = l.to_vec();
                let mut pick = SubsetCode::EMPTY;
                while pick.len() < 4 {
                    pick.insert(pts[rng.gen_range(0..pts.len())]);
                }
                pick
            })
            .unwrap();
            assert!(equivariant_choose(&m).unwrap().is_some());
        }
    }
}
