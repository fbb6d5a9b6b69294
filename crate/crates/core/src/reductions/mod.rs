//! Constructive reductions: from a selection oracle of arity `n` on a finite
//! family of disjoint sets, build a partial choice of `n`-subsets.
//!
//! Each unfinished member carries an ordered list of parts. A part is either
//! the trace of the member on some extracted set (and then the oracle of that
//! extraction applies to it) or the remainder left outside every extraction.
//! A member is finished as soon as one of its parts can be handed to the
//! oracle or some of its parts add up to exactly `n` atoms. Otherwise parts
//! get refined by three devices:
//!
//! * a fresh extraction on the union of remainders;
//! * the outdegree digraph on equal-sized traces `B_i`, where the edge
//!   `(i, j)` exists iff `B_j ⊄ g(B_i ∪ B_j)`;
//! * for arity 6 only, the edge grid on members with traces of sizes 3 and 2.
//!
//! Wherever an argument would pick among infinitely many cases, the finite
//! version takes the largest class and breaks ties by the least key.

pub mod grid;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use grid::{build_edge_grid, left_out, GridSplit};
use oracle::{OracleCall, SelectionOracle, Universe};

pub use grid::EdgeGrid;

/// Arities with an implemented reduction.
pub const SUPPORTED_ARITIES: [usize; 4] = [2, 3, 4, 6];

/// Smallest family `reduce` accepts for arity `n`.
///
/// Arity 2 never needs the digraph. The others rely on it, and a digraph on
/// `2k' + 3` vertices cannot keep every outdegree at most `k'`; with `k' = 0`
/// that is three members, the least size at which an edge is forced.
pub fn min_family_size(n: usize) -> usize {
    if n == 2 {
        1
    } else {
        3
    }
}

/// A finite family of pairwise disjoint sets together with its oracle.
pub struct OracleFamily<'a> {
    members: Vec<Vec<u32>>,
    arity: usize,
    oracle: Box<dyn SelectionOracle + 'a>,
    forced: Vec<Vec<u32>>,
    apps: Vec<Vec<u32>>,
    log: Vec<OracleCall>,
}

impl<'a> OracleFamily<'a> {
    /// Members are sorted internally; they must be non-empty and pairwise disjoint.
    pub fn new(
        members: Vec<Vec<u32>>,
        arity: usize,
        oracle: impl SelectionOracle + 'a,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Precondition("arity must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        let mut sorted = Vec::with_capacity(members.len());
        for (j, mut m) in members.into_iter().enumerate() {
            m.sort_unstable();
            m.dedup();
            if m.is_empty() {
                return Err(Error::Precondition(format!("member {j} is empty")));
            }
            for &a in &m {
                if !seen.insert(a) {
                    return Err(Error::Precondition(format!(
                        "atom {a} occurs in more than one member"
                    )));
                }
            }
            sorted.push(m);
        }
        Ok(OracleFamily {
            members: sorted,
            arity,
            oracle: Box::new(oracle),
            forced: Vec::new(),
            apps: Vec::new(),
            log: Vec::new(),
        })
    }

    /// Fixes the first atom extractions instead of asking the oracle: the
    /// `t`-th extraction returns `sets[t] ∩ x`. Forced sets are not logged.
    pub fn with_forced_traces(mut self, sets: Vec<Vec<u32>>) -> Self {
        self.forced = sets.into_iter().rev().collect();
        self
    }

    pub fn members(&self) -> &[Vec<u32>] {
        &self.members
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Every oracle call made so far, in order.
    pub fn calls(&self) -> &[OracleCall] {
        &self.log
    }

    /// The set extracted by application `app`.
    pub fn extracted(&self, app: usize) -> &[u32] {
        &self.apps[app]
    }

    fn extract(&mut self, universe: Universe, x: &[u32]) -> Result<(usize, Vec<u32>)> {
        let app = self.apps.len();
        let forced = if universe == Universe::Atoms {
            self.forced.pop()
        } else {
            None
        };
        let was_forced = forced.is_some();
        let mut y = match forced {
            Some(set) => set.into_iter().filter(|a| x.binary_search(a).is_ok()).collect(),
            None => {
                let y = self.oracle.extract(app, universe, x);
                self.log.push(OracleCall::Extract {
                    app,
                    universe,
                    input: x.to_vec(),
                    output: y.clone(),
                });
                y
            }
        };
        y.sort_unstable();
        y.dedup();
        if y.iter().any(|a| x.binary_search(a).is_err()) {
            return Err(Error::Malformed(format!(
                "extraction {app} left its ground set"
            )));
        }
        if y.is_empty() && !x.is_empty() && !was_forced {
            return Err(Error::Malformed(format!("extraction {app} is empty")));
        }
        self.apps.push(y.clone());
        Ok((app, y))
    }

    fn select(&mut self, app: usize, l: &[u32]) -> Result<Vec<u32>> {
        let n = self.arity;
        debug_assert!(l.windows(2).all(|w| w[0] < w[1]));
        if l.len() <= n || l.iter().any(|a| self.apps[app].binary_search(a).is_err()) {
            return Err(Error::Precondition(format!(
                "query {l:?} is not a large subset of extraction {app}"
            )));
        }
        let mut out = self.oracle.select(app, l, n);
        self.log.push(OracleCall::Select {
            app,
            input: l.to_vec(),
            output: out.clone(),
        });
        out.sort_unstable();
        out.dedup();
        if out.len() != n || out.iter().any(|a| l.binary_search(a).is_err()) {
            return Err(Error::Malformed(format!(
                "oracle answered {out:?} for {l:?}, not a {n}-subset"
            )));
        }
        Ok(out)
    }
}

/// Member index to chosen `k`-subset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialSelection {
    pub k: usize,
    pub assignments: BTreeMap<usize, Vec<u32>>,
}

impl PartialSelection {
    pub fn new(k: usize) -> Self {
        PartialSelection {
            k,
            assignments: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Every assigned set has `k` distinct atoms, all inside its member.
    pub fn validate(&self, members: &[Vec<u32>]) -> Result<()> {
        for (&j, s) in &self.assignments {
            let m = members
                .get(j)
                .ok_or_else(|| Error::Malformed(format!("member {j} does not exist")))?;
            let distinct: BTreeSet<u32> = s.iter().copied().collect();
            if distinct.len() != s.len() || s.len() != self.k {
                return Err(Error::Malformed(format!(
                    "member {j}: {s:?} is not a {}-set",
                    self.k
                )));
            }
            if let Some(a) = s.iter().find(|a| !m.contains(a)) {
                return Err(Error::Malformed(format!("member {j}: atom {a} not in member")));
            }
        }
        Ok(())
    }
}

/// Parses a family file: either `[[..], ..]` or `{"members": [[..], ..]}`.
pub fn parse_family(text: &str) -> Result<Vec<Vec<u32>>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum FamilyFile {
        Bare(Vec<Vec<u32>>),
        Wrapped { members: Vec<Vec<u32>> },
    }
    match serde_json::from_str(text).map_err(|e| Error::Parse(format!("family: {e}")))? {
        FamilyFile::Bare(m) | FamilyFile::Wrapped { members: m } => Ok(m),
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

fn prime_power(p: u64, k: u32) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    if k == 0 {
        return Err(Error::Precondition("exponent must be positive".into()));
    }
    p.checked_pow(k)
        .ok_or_else(|| Error::BoundExceeded(format!("{p}^{k} overflows")))
}

/// Picks divisors of `p^k` summing to exactly `p^k`, largest first.
///
/// Greedy works because every size is a power of `p`: once the running
/// total is a multiple of the current size, the gap is too.
pub fn subsum_divisors(p: u64, k: u32, sizes: &[u64]) -> Result<Vec<u64>> {
    let q = prime_power(p, k)?;
    if let Some(s) = sizes.iter().find(|&&s| s == 0 || q % s != 0) {
        return Err(Error::Precondition(format!("{s} does not divide {q}")));
    }
    let total: u64 = sizes.iter().sum();
    if total <= q {
        return Err(Error::Precondition(format!("sizes sum to {total}, need more than {q}")));
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut picked = Vec::new();
    let mut sum = 0;
    for s in sorted {
        if sum + s <= q {
            sum += s;
            picked.push(s);
        }
    }
    if sum != q {
        return Err(Error::Malformed(format!("greedy reached {sum}, not {q}")));
    }
    Ok(picked)
}

/// True iff no digraph on `v` vertices with an edge in every pair can keep
/// all outdegrees at most `k'`: `v(v-1)/2 > v k'`.
pub fn outdegree_bound_check(v: u64, max_outdegree: u64) -> bool {
    v * v.saturating_sub(1) / 2 > v * max_outdegree
}

#[derive(Clone, Debug)]
struct Part {
    atoms: Vec<u32>,
    app: Option<usize>,
}

#[derive(Clone, Debug)]
struct Member {
    parts: Vec<Part>,
    chosen: Option<Vec<u32>>,
}

/// Refines part `part` of member `member` into `q` and the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Split {
    member: usize,
    part: usize,
    q: Vec<u32>,
}

/// Index set of the lexicographically first choice of parts summing to `target`.
fn first_subsum(sizes: &[usize], target: usize) -> Option<Vec<usize>> {
    let len = sizes.len();
    let mut reach = vec![vec![false; target + 1]; len + 1];
    reach[len][0] = true;
    for i in (0..len).rev() {
        for t in 0..=target {
            reach[i][t] = reach[i + 1][t] || (t >= sizes[i] && reach[i + 1][t - sizes[i]]);
        }
    }
    if !reach[0][target] {
        return None;
    }
    let mut need = target;
    let mut picked = Vec::new();
    for i in 0..len {
        if need >= sizes[i] && reach[i + 1][need - sizes[i]] {
            picked.push(i);
            need -= sizes[i];
        }
    }
    Some(picked)
}

fn union_of(parts: &[Part], idx: &[usize]) -> Vec<u32> {
    let mut u: Vec<u32> = idx.iter().flat_map(|&i| parts[i].atoms.iter().copied()).collect();
    u.sort_unstable();
    u
}

struct Engine<'f, 'a> {
    fam: &'f mut OracleFamily<'a>,
    n: usize,
    members: Vec<Member>,
    /// `Some(p, k)` switches exact sums over prime-power divisors to the greedy pick.
    divisors: Option<(u64, u32)>,
}

impl<'f, 'a> Engine<'f, 'a> {
    fn new(fam: &'f mut OracleFamily<'a>, divisors: Option<(u64, u32)>) -> Self {
        let members = fam
            .members
            .iter()
            .map(|m| Member {
                parts: vec![Part {
                    atoms: m.clone(),
                    app: None,
                }],
                chosen: None,
            })
            .collect();
        let n = fam.arity;
        Engine {
            fam,
            n,
            members,
            divisors,
        }
    }

    fn open(&self) -> Vec<usize> {
        (0..self.members.len())
            .filter(|&j| self.members[j].chosen.is_none())
            .collect()
    }

    fn finish_all(&mut self) -> Result<()> {
        for j in 0..self.members.len() {
            if self.members[j].chosen.is_none() {
                self.members[j].chosen = self.try_finish(j)?;
            }
        }
        Ok(())
    }

    fn try_finish(&mut self, j: usize) -> Result<Option<Vec<u32>>> {
        let n = self.n;
        let parts = &self.members[j].parts;
        if let Some(p) = parts
            .iter()
            .find(|p| p.atoms.len() == n || (p.atoms.len() > n && p.app.is_some()))
        {
            return Ok(Some(match p.app {
                Some(app) if p.atoms.len() > n => {
                    let l = p.atoms.clone();
                    self.fam.select(app, &l)?
                }
                _ => p.atoms.clone(),
            }));
        }
        let sizes: Vec<usize> = parts.iter().map(|p| p.atoms.len()).collect();
        let total: usize = sizes.iter().sum();
        if let Some((p, k)) = self.divisors {
            let q = n as u64;
            if total > n && sizes.iter().all(|&s| q % s as u64 == 0) {
                let sizes64: Vec<u64> = sizes.iter().map(|&s| s as u64).collect();
                let mut want = subsum_divisors(p, k, &sizes64)?;
                let mut idx = Vec::new();
                for (i, &s) in sizes64.iter().enumerate() {
                    if let Some(pos) = want.iter().position(|&w| w == s) {
                        want.swap_remove(pos);
                        idx.push(i);
                    }
                }
                return Ok(Some(union_of(parts, &idx)));
            }
        }
        Ok(first_subsum(&sizes, n).map(|idx| union_of(parts, &idx)))
    }

    /// One extraction on the union of all remainders; false when none is left.
    fn extract_remainders(&mut self) -> Result<bool> {
        let mut x: Vec<u32> = self
            .open()
            .into_iter()
            .flat_map(|j| {
                self.members[j]
                    .parts
                    .iter()
                    .filter(|p| p.app.is_none())
                    .flat_map(|p| p.atoms.iter().copied())
            })
            .collect();
        if x.is_empty() {
            return Ok(false);
        }
        x.sort_unstable();
        let (app, y) = self.fam.extract(Universe::Atoms, &x)?;
        if y.is_empty() {
            return Ok(true);
        }
        let open = self.open();
        for j in open {
            let mut next = Vec::new();
            for p in std::mem::take(&mut self.members[j].parts) {
                if p.app.is_some() {
                    next.push(p);
                    continue;
                }
                let (inside, outside): (Vec<u32>, Vec<u32>) =
                    p.atoms.iter().partition(|a| y.binary_search(a).is_ok());
                for (atoms, tag) in [(inside, Some(app)), (outside, None)] {
                    if !atoms.is_empty() {
                        next.push(Part { atoms, app: tag });
                    }
                }
            }
            self.members[j].parts = next;
        }
        Ok(true)
    }

    fn apply(&mut self, splits: &[Split]) -> usize {
        let mut done = BTreeSet::new();
        let mut by_member: BTreeMap<usize, Vec<&Split>> = BTreeMap::new();
        for s in splits {
            if done.insert((s.member, s.part)) {
                by_member.entry(s.member).or_default().push(s);
            }
        }
        let mut applied = 0;
        for (j, mut ss) in by_member {
            // Later parts first so indices stay valid.
            ss.sort_by(|a, b| b.part.cmp(&a.part));
            for s in ss {
                let p = &self.members[j].parts[s.part];
                if s.q.is_empty() || s.q.len() >= p.atoms.len() {
                    continue;
                }
                let rest: Vec<u32> =
                    p.atoms.iter().copied().filter(|a| !s.q.contains(a)).collect();
                let app = p.app;
                self.members[j].parts.splice(
                    s.part..=s.part,
                    [
                        Part {
                            atoms: s.q.clone(),
                            app,
                        },
                        Part { atoms: rest, app },
                    ],
                );
                applied += 1;
            }
        }
        applied
    }

    /// Open members' traces eligible for the digraph, grouped by
    /// `(extraction, size)`, largest group first.
    fn digraph_groups(&self) -> Vec<Vec<(usize, usize)>> {
        let n = self.n;
        let mut groups: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for j in self.open() {
            for (pi, p) in self.members[j].parts.iter().enumerate() {
                let s = p.atoms.len();
                if let Some(app) = p.app {
                    if s < n && 2 * s > n {
                        groups.entry((app, s)).or_default().push((j, pi));
                    }
                }
            }
        }
        let mut out: Vec<_> = groups.into_iter().collect();
        out.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
        out.into_iter().map(|(_, v)| v).collect()
    }

    /// The outdegree digraph on equal traces `B_v` inside one extraction.
    fn digraph(&mut self, group: &[(usize, usize)]) -> Result<Vec<Split>> {
        let n = self.n;
        let v = group.len();
        if v < 2 {
            return Ok(Vec::new());
        }
        let app = self.members[group[0].0].parts[group[0].1].app.expect("trace");
        let b: Vec<Vec<u32>> = group
            .iter()
            .map(|&(j, p)| self.members[j].parts[p].atoms.clone())
            .collect();
        // One oracle call per unordered pair decides both directions.
        let mut picks = vec![vec![Vec::new(); v]; v];
        for i in 0..v {
            for k in i + 1..v {
                let mut u: Vec<u32> = b[i].iter().chain(&b[k]).copied().collect();
                u.sort_unstable();
                let g = self.fam.select(app, &u)?;
                picks[i][k] = g.clone();
                picks[k][i] = g;
            }
        }
        let edge = |i: usize, k: usize| b[k].iter().any(|a| !picks[i][k].contains(a));
        let split_at = |i: usize, k: usize| -> Option<Split> {
            let q: Vec<u32> = b[k].iter().copied().filter(|a| !picks[i][k].contains(a)).collect();
            (!q.is_empty() && q.len() < b[k].len()).then(|| Split {
                member: group[k].0,
                part: group[k].1,
                q,
            })
        };
        let pair = |i: usize, k: usize| -> Option<Split> {
            if edge(i, k) {
                split_at(i, k)
            } else {
                split_at(k, i)
            }
        };

        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..v {
            let out = (0..v).filter(|&k| k != i && edge(i, k)).count();
            classes.entry(out).or_default().push(i);
        }
        // Narrow every outdegree class to at most n vertices through an
        // extraction on the member indices.
        let ids: Vec<u32> = group.iter().map(|&(j, _)| j as u32).collect();
        let mut sorted_ids = ids.clone();
        sorted_ids.sort_unstable();
        let (iapp, iy) = self.fam.extract(Universe::Indices, &sorted_ids)?;
        let vertex_of = |id: u32| ids.iter().position(|&x| x == id).expect("vertex");
        let mut narrowed: Vec<Vec<usize>> = Vec::new();
        for class in classes.values() {
            let mut c: Vec<u32> = class
                .iter()
                .map(|&i| ids[i])
                .filter(|id| iy.binary_search(id).is_ok())
                .collect();
            c.sort_unstable();
            if c.len() > n {
                c = self.fam.select(iapp, &c)?;
            }
            if !c.is_empty() {
                narrowed.push(c.into_iter().map(vertex_of).collect());
            }
        }
        let mut count = BTreeMap::new();
        for c in &narrowed {
            *count.entry(c.len()).or_insert(0usize) += 1;
        }
        let mut splits = Vec::new();
        if let Some((&m, _)) = count.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
            let chosen: Vec<&Vec<usize>> = narrowed.iter().filter(|c| c.len() == m).collect();
            match m {
                1 => {
                    for w in chosen.chunks(2).filter(|w| w.len() == 2) {
                        splits.extend(pair(w[0][0], w[1][0]));
                    }
                }
                2 => {
                    for c in chosen {
                        splits.extend(pair(c[0], c[1]));
                    }
                }
                3 => {
                    for c in chosen {
                        for &k in c.iter() {
                            if let Some(&i) = c.iter().find(|&&i| i != k && edge(i, k)) {
                                splits.extend(split_at(i, k));
                            }
                        }
                    }
                }
                _ => {
                    for c in chosen {
                        let mut u: Vec<u32> =
                            c.iter().flat_map(|&i| b[i].iter().copied()).collect();
                        u.sort_unstable();
                        let h = self.fam.select(app, &u)?;
                        let before = splits.len();
                        for &i in c.iter() {
                            let q: Vec<u32> =
                                b[i].iter().copied().filter(|a| h.contains(a)).collect();
                            if !q.is_empty() && q.len() < b[i].len() {
                                splits.push(Split {
                                    member: group[i].0,
                                    part: group[i].1,
                                    q,
                                });
                            }
                        }
                        if splits.len() == before {
                            splits.extend(pair(c[0], c[1]));
                        }
                    }
                }
            }
        }
        if splits.is_empty() {
            splits.extend(pair(0, 1));
        }
        Ok(splits)
    }

    /// Members whose traces include one of size 3 and one of size 2, grouped
    /// by the extractions holding them; largest group first.
    fn grid_group(&self) -> Vec<(usize, usize, usize)> {
        let mut groups: BTreeMap<(usize, usize), Vec<(usize, usize, usize)>> = BTreeMap::new();
        for j in self.open() {
            let parts = &self.members[j].parts;
            let three = parts.iter().position(|p| p.app.is_some() && p.atoms.len() == 3);
            let two = parts.iter().position(|p| p.app.is_some() && p.atoms.len() == 2);
            if let (Some(t), Some(w)) = (three, two) {
                let key = (parts[t].app.unwrap(), parts[w].app.unwrap());
                groups.entry(key).or_default().push((j, t, w));
            }
        }
        groups
            .into_iter()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0)))
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    /// The edge-grid argument for members with traces of sizes 3 and 2.
    fn edge_grid(&mut self) -> Result<Vec<Split>> {
        let group = self.grid_group();
        if group.is_empty() {
            return Ok(Vec::new());
        }
        let traces: Vec<(Vec<u32>, Vec<u32>)> = group
            .iter()
            .map(|&(j, t, w)| {
                let p = &self.members[j].parts;
                (p[t].atoms.clone(), p[w].atoms.clone())
            })
            .collect();
        let mut grid = build_edge_grid(&traces)?;
        let to_split = |g: usize, s: GridSplit| -> Split {
            let (j, t, w) = group[g];
            match s {
                GridSplit::Rows(q) => Split { member: j, part: t, q },
                GridSplit::Cols(q) => Split { member: j, part: w, q },
            }
        };
        let mut splits = Vec::new();
        let (eapp, ey) = self.fam.extract(Universe::Edges, &grid.all_edges())?;
        let mut full = vec![false; grid.len()];
        for (g, slot) in full.iter_mut().enumerate() {
            let inside: Vec<u32> =
                grid.edges(g).into_iter().filter(|e| ey.binary_search(e).is_ok()).collect();
            if inside.len() == 6 {
                *slot = true;
            } else if let Some(s) = grid.split_from_edges(g, &inside) {
                splits.push(to_split(g, s));
            }
        }
        if full.iter().filter(|&&f| f).count() < 2 {
            return Ok(splits);
        }
        let fam = &mut *self.fam;
        let deg = grid.compute_degrees(&full, |s| fam.select(eapp, s))?;
        let mut classes: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for g in (0..grid.len()).filter(|&g| full[g]) {
            for col in 0..2 {
                classes.entry(deg[g][col]).or_default().push((g, col));
            }
        }
        // A class of at least three columns is large enough to query.
        let mut owners = Vec::new();
        for cols in classes.values().filter(|c| c.len() >= 3) {
            let mut u: Vec<u32> = cols.iter().flat_map(|&(g, c)| grid.col(g, c)).collect();
            u.sort_unstable();
            let s = self.fam.select(eapp, &u)?;
            let mut hit = false;
            for g in (0..grid.len()).filter(|&g| full[g]) {
                if let Some(sp) = grid.split_from_edges(g, &s) {
                    splits.push(to_split(g, sp));
                    hit = true;
                }
            }
            if !hit {
                if let Some(i) = (0..grid.len()).find(|&i| grid.edges(i) == s) {
                    owners.push(i);
                }
            }
        }
        owners.dedup();
        for w in owners.windows(2) {
            let (i, l) = (w[0], w[1]);
            let mut found = false;
            let mut left_in_col = Vec::new();
            for col in 0..2 {
                let g_col = grid.col(i, col);
                let mut hits = Vec::new();
                for pair in 0..3 {
                    let probe = grid.probe(i, col, l, pair);
                    let kept = self.fam.select(eapp, &probe)?;
                    let e = left_out(&probe, &kept)?;
                    if g_col.contains(&e) {
                        hits.push((e, pair));
                    }
                }
                let q: BTreeSet<u32> = hits.iter().map(|&(e, _)| grid.edge(e).0).collect();
                if !q.is_empty() && q.len() < 3 {
                    splits.push(to_split(i, GridSplit::Rows(q.into_iter().collect())));
                    found = true;
                    break;
                }
                left_in_col.push(hits);
            }
            if !found {
                // Every column of i is hit three times; anchor on the least
                // column and least row of i.
                let anchor = grid.edge_id(i, 0, 0);
                if let Some(&(_, pair)) = left_in_col[0].iter().find(|&&(e, _)| e == anchor) {
                    let (r, s) = [(0, 1), (0, 2), (1, 2)][pair];
                    let other = 3 - r - s;
                    splits.push(to_split(l, GridSplit::Rows(vec![grid.member(l).y[other]])));
                }
            }
        }
        Ok(splits)
    }

    /// Chunks equal traces whose size does not divide the arity: among the
    /// first `l` of them, with `l` least such that `l m > n`, the oracle must
    /// cut at least one trace properly.
    fn chunking(&mut self) -> Result<Vec<Split>> {
        let n = self.n;
        let mut groups: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for j in self.open() {
            for (pi, p) in self.members[j].parts.iter().enumerate() {
                let m = p.atoms.len();
                if let Some(app) = p.app {
                    if m < n && n % m != 0 {
                        groups.entry((app, m)).or_default().push((j, pi));
                    }
                }
            }
        }
        let mut ordered: Vec<_> = groups.into_iter().collect();
        ordered.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
        for ((app, m), traces) in ordered {
            let l = n / m + 1;
            let mut splits = Vec::new();
            for chunk in traces.chunks(l).filter(|c| c.len() == l) {
                let mut u: Vec<u32> = chunk
                    .iter()
                    .flat_map(|&(j, p)| self.members[j].parts[p].atoms.iter().copied())
                    .collect();
                u.sort_unstable();
                let h = self.fam.select(app, &u)?;
                for &(j, p) in chunk {
                    let q: Vec<u32> = self.members[j].parts[p]
                        .atoms
                        .iter()
                        .copied()
                        .filter(|a| h.contains(a))
                        .collect();
                    if !q.is_empty() && q.len() < m {
                        splits.push(Split { member: j, part: p, q });
                    }
                }
            }
            if !splits.is_empty() {
                return Ok(splits);
            }
        }
        Ok(Vec::new())
    }

    fn into_selection(self) -> PartialSelection {
        let mut sel = PartialSelection::new(self.n);
        for (j, m) in self.members.into_iter().enumerate() {
            if let Some(c) = m.chosen {
                sel.assignments.insert(j, c);
            }
        }
        sel
    }
}

fn check_members(fam: &OracleFamily, n: usize) -> Result<()> {
    if fam.arity != n {
        return Err(Error::Precondition(format!(
            "family arity {} differs from {n}",
            fam.arity
        )));
    }
    if let Some((j, m)) = fam.members.iter().enumerate().find(|(_, m)| m.len() <= n) {
        return Err(Error::Precondition(format!(
            "member {j} has {} atoms, need more than {n}",
            m.len()
        )));
    }
    Ok(())
}

/// Partial choice of `n`-subsets for `n ∈ {2, 3, 4, 6}` from an arity-`n` oracle.
pub fn reduce(n: usize, fam: &mut OracleFamily) -> Result<PartialSelection> {
    if !SUPPORTED_ARITIES.contains(&n) {
        return Err(Error::Precondition(format!(
            "arity {n} has no reduction; supported: {SUPPORTED_ARITIES:?}"
        )));
    }
    check_members(fam, n)?;
    let need = min_family_size(n);
    if fam.members.len() < need {
        return Err(Error::FamilyTooSmall(format!(
            "arity {n} needs at least {need} members, got {}",
            fam.members.len()
        )));
    }
    let mut e = Engine::new(fam, None);
    loop {
        e.finish_all()?;
        if e.open().is_empty() {
            break;
        }
        if e.extract_remainders()? {
            continue;
        }
        let mut applied = 0;
        for group in e.digraph_groups() {
            let splits = e.digraph(&group)?;
            applied = e.apply(&splits);
            if applied > 0 {
                break;
            }
        }
        if applied == 0 && n == 6 {
            let splits = e.edge_grid()?;
            applied = e.apply(&splits);
        }
        if applied == 0 {
            break;
        }
    }
    Ok(e.into_selection())
}

/// Partial choice of `p^k`-subsets from a well-ordered family, by chunking
/// traces in member order and finishing with [`subsum_divisors`].
pub fn reduce_pk_woc(p: u64, k: u32, fam: &mut OracleFamily) -> Result<PartialSelection> {
    let q = prime_power(p, k)? as usize;
    check_members(fam, q)?;
    if fam.members.is_empty() {
        return Err(Error::FamilyTooSmall("the family is empty".into()));
    }
    let mut e = Engine::new(fam, Some((p, k)));
    loop {
        e.finish_all()?;
        if e.open().is_empty() {
            break;
        }
        if e.extract_remainders()? {
            continue;
        }
        let splits = e.chunking()?;
        if e.apply(&splits) == 0 {
            break;
        }
    }
    Ok(e.into_selection())
}

#[cfg(test)]
mod tests {
    use super::oracle::{LexOracle, ReplayOracle, SeededOracle};
    use super::*;

    fn blocks(count: u32, size: u32) -> Vec<Vec<u32>> {
        (0..count).map(|j| (size * j..size * (j + 1)).collect()).collect()
    }

    fn brute_subsum(sizes: &[u64], target: u64) -> bool {
        (0u32..1 << sizes.len()).any(|mask| {
            sizes
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, s)| s)
                .sum::<u64>()
                == target
        })
    }

    #[test]
    fn subsum_examples() {
        assert_eq!(subsum_divisors(2, 3, &[4, 4, 2, 2, 1]).unwrap(), vec![4, 4]);
        assert_eq!(subsum_divisors(3, 1, &[1, 1, 3]).unwrap(), vec![3]);
        assert_eq!(subsum_divisors(2, 2, &[2, 1, 1, 1]).unwrap(), vec![2, 1, 1]);
    }

    #[test]
    fn subsum_preconditions() {
        assert!(subsum_divisors(4, 1, &[1, 1, 1, 1, 1]).is_err());
        assert!(subsum_divisors(2, 2, &[3, 1, 1]).is_err());
        assert!(subsum_divisors(2, 2, &[2, 2]).is_err());
    }

    #[test]
    fn subsum_matches_brute_force_small() {
        for (p, k) in [(2u64, 2u32), (3, 1), (2, 3)] {
            let q = p.pow(k);
            let divs: Vec<u64> = (0..=k).map(|e| p.pow(e)).collect();
            for mask in 0u32..4096 {
                let mut sizes = Vec::new();
                let mut m = mask;
                for &d in &divs {
                    let c = (m % 4) as usize;
                    m /= 4;
                    sizes.extend(std::iter::repeat(d).take(c));
                }
                let total: u64 = sizes.iter().sum();
                if total <= q {
                    continue;
                }
                let got = subsum_divisors(p, k, &sizes);
                assert_eq!(got.is_ok(), brute_subsum(&sizes, q), "{sizes:?}");
            }
        }
    }

    #[test]
    fn outdegree_examples() {
        assert!(outdegree_bound_check(5, 1));
        assert!(!outdegree_bound_check(2, 1));
        for k in 0..=10 {
            assert!(outdegree_bound_check(2 * k + 3, k));
        }
    }

    #[test]
    fn lex_pairs_for_arity_two() {
        let members = blocks(6, 3);
        let mut fam = OracleFamily::new(members.clone(), 2, LexOracle).unwrap();
        let sel = reduce(2, &mut fam).unwrap();
        sel.validate(&members).unwrap();
        assert_eq!(sel.len(), 6);
        for (j, s) in &sel.assignments {
            assert_eq!(s, &members[*j][..2]);
        }
    }

    #[test]
    fn arity_four_twenty_fives() {
        let members = blocks(20, 5);
        let mut fam = OracleFamily::new(members.clone(), 4, SeededOracle::new(0)).unwrap();
        let sel = reduce(4, &mut fam).unwrap();
        sel.validate(&members).unwrap();
        assert!(!sel.is_empty());
    }

    #[test]
    fn arity_six_forced_grid_profile() {
        let members = blocks(12, 7);
        let pick = |lo: u32, hi: u32| -> Vec<u32> {
            members.iter().flat_map(|m| m[lo as usize..hi as usize].to_vec()).collect()
        };
        let forced = vec![pick(0, 3), pick(3, 5), pick(5, 7)];
        let mut fam = OracleFamily::new(members.clone(), 6, SeededOracle::new(4))
            .unwrap()
            .with_forced_traces(forced);
        let sel = reduce(6, &mut fam).unwrap();
        sel.validate(&members).unwrap();
        assert!(!sel.is_empty());
        assert!(fam.calls().iter().any(|c| matches!(
            c,
            OracleCall::Extract {
                universe: Universe::Edges,
                ..
            }
        )));
    }

    #[test]
    fn too_small_family() {
        let mut fam = OracleFamily::new(blocks(2, 5), 4, LexOracle).unwrap();
        assert!(matches!(reduce(4, &mut fam), Err(Error::FamilyTooSmall(_))));
        let mut fam = OracleFamily::new(blocks(0, 5), 4, LexOracle).unwrap();
        assert!(matches!(
            reduce_pk_woc(2, 2, &mut fam),
            Err(Error::FamilyTooSmall(_))
        ));
    }

    #[test]
    fn bad_inputs() {
        assert!(OracleFamily::new(vec![vec![1, 2, 3], vec![3, 4, 5]], 2, LexOracle).is_err());
        let mut fam = OracleFamily::new(blocks(4, 2), 2, LexOracle).unwrap();
        assert!(reduce(2, &mut fam).is_err());
        let mut fam = OracleFamily::new(blocks(4, 6), 5, LexOracle).unwrap();
        assert!(reduce(5, &mut fam).is_err());
    }

    #[test]
    fn replay_reproduces_run() {
        let members = blocks(15, 5);
        let mut fam = OracleFamily::new(members.clone(), 3, SeededOracle::new(11)).unwrap();
        let first = reduce(3, &mut fam).unwrap();
        let trace = oracle::write_trace(fam.calls());
        let replay = ReplayOracle::from_trace(&trace).unwrap();
        let mut again = OracleFamily::new(members, 3, replay).unwrap();
        assert_eq!(reduce(3, &mut again).unwrap(), first);
    }

    #[test]
    fn pk_examples() {
        for seed in 0..20 {
            let members = blocks(9, 3);
            let mut fam = OracleFamily::new(members.clone(), 2, SeededOracle::new(seed)).unwrap();
            let sel = reduce_pk_woc(2, 1, &mut fam).unwrap();
            sel.validate(&members).unwrap();
            assert!(sel.len() >= members.len() / 2);

            let members = blocks(10, 5);
            let mut fam = OracleFamily::new(members.clone(), 4, SeededOracle::new(seed)).unwrap();
            let sel = reduce_pk_woc(2, 2, &mut fam).unwrap();
            sel.validate(&members).unwrap();
            assert!(!sel.is_empty());
            assert!(sel.assignments.values().all(|s| s.len() == 4));
        }
    }

    #[test]
    fn seeded_runs_are_valid_and_nonempty() {
        for n in SUPPORTED_ARITIES {
            for seed in 0..40 {
                let size = n as u32 + 1 + (seed % 3) as u32;
                let members = blocks(10 + (seed % 4) as u32 * 10, size);
                let mut fam =
                    OracleFamily::new(members.clone(), n, SeededOracle::new(seed)).unwrap();
                let sel = reduce(n, &mut fam).unwrap();
                sel.validate(&members).unwrap();
                assert!(!sel.is_empty(), "n={n} seed={seed}");
            }
        }
    }
}
