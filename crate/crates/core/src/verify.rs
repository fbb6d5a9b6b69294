//! Independent certificate checker.
//!
//! Works from the JSON text alone with its own parsing, closure and orbit loops,
//! so a bug in the search code cannot vouch for itself.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde_json::Value;

use crate::deciders::Certificate;

const MAX_DEGREE: usize = 24;
const MAX_EXPLICIT: usize = 20;
const MAX_ELEMENTS: usize = 1_000_000;

/// Why a certificate was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Parse,
    Schema,
    Group,
    Table,
    Equivariance,
    Target,
    Impossibility,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::Parse => "parse",
            Reason::Schema => "schema",
            Reason::Group => "group",
            Reason::Table => "table",
            Reason::Equivariance => "equivariance",
            Reason::Target => "target",
            Reason::Impossibility => "impossibility",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub reason: Reason,
    pub detail: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.detail)
    }
}

type Check<T> = std::result::Result<T, Rejection>;

fn reject<T>(reason: Reason, detail: impl Into<String>) -> Check<T> {
    Err(Rejection { reason, detail: detail.into() })
}

pub fn verify_certificate(c: &Certificate) -> Check<()> {
    verify_json(&c.to_json())
}

/// Checks a certificate file's contents.
pub fn verify_json(text: &str) -> Check<()> {
    let v: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return reject(Reason::Parse, e.to_string()),
    };
    if v.get("schema_version").and_then(Value::as_str) != Some("1") {
        return reject(Reason::Schema, "schema_version must be \"1\"");
    }
    let d = uint(&v, "domain_size")?;
    if d == 0 || d > MAX_DEGREE {
        return reject(Reason::Schema, format!("domain_size {d} outside 1..={MAX_DEGREE}"));
    }
    let claim = v.get("claim").ok_or(Rejection { reason: Reason::Schema, detail: "missing claim".into() })?;
    let kind = claim.get("kind").and_then(Value::as_str).unwrap_or("");
    // (arity of the table or None, size of the impossible invariant subset)
    let (arity, k) = match kind {
        "rc_failure" => (Some(uint(claim, "n")?), 1),
        "nrc_failure" => (Some(uint(claim, "n")?), uint(claim, "k")?),
        "zoo_failure" => {
            let n = uint(claim, "n")?;
            match claim.get("principle").and_then(Value::as_str) {
                Some("nrc_fin") | Some("ncfin_minus") => (None, n),
                Some("c_n") | Some("rc") => (None, 1),
                other => return reject(Reason::Schema, format!("unknown principle {other:?}")),
            }
        }
        _ => return reject(Reason::Schema, format!("unknown claim kind {kind:?}")),
    };
    if arity == Some(0) || k == 0 {
        return reject(Reason::Schema, "arities must be positive");
    }

    let gens = match v.get("group_generators").and_then(Value::as_array) {
        Some(a) => a
            .iter()
            .map(|g| g.as_str().map_or(reject(Reason::Group, "generator is not a string"), |s| parse_cycles(s, d)))
            .collect::<Check<Vec<Vec<usize>>>>()?,
        None => return reject(Reason::Schema, "missing group_generators"),
    };
    let group = closure(&gens, d)?;

    let target = match v.get("target_set") {
        Some(t) => set_code(t, d)?,
        None => return reject(Reason::Schema, "missing target_set"),
    };
    if kind == "rc_failure" {
        let m = uint(claim, "m")?;
        if m != d || target != full(d) {
            return reject(Reason::Target, "rc witness must target the whole m-point domain");
        }
    }
    if (target.count_ones() as usize) <= k {
        return reject(Reason::Target, format!("target has no more than {k} points"));
    }

    let table = v.get("sel_table").ok_or(Rejection { reason: Reason::Schema, detail: "missing sel_table".into() })?;
    match arity {
        None => {
            if table.as_array().map_or(true, |a| !a.is_empty()) {
                return reject(Reason::Table, "zoo witnesses carry an empty table");
            }
        }
        Some(n) => match table {
            Value::Array(rows) => check_explicit(rows, d, n, &group)?,
            Value::Object(o) => match o.get("orbit_generated") {
                Some(oc) => check_orbit_generated(oc, d, n, &group)?,
                None => return reject(Reason::Schema, "unknown sel_table form"),
            },
            _ => return reject(Reason::Schema, "unknown sel_table form"),
        },
    }

    // the group fixing the target setwise must leave no invariant k-subset of it
    let stab: Vec<&Vec<usize>> = group.iter().filter(|p| image(p, target) == target).collect();
    let mut sums = vec![true];
    let mut left = target;
    while left != 0 {
        let start = left.trailing_zeros() as usize;
        let mut orbit = 1u64 << start;
        for p in &stab {
            orbit |= 1 << p[start];
        }
        left &= !orbit;
        let s = orbit.count_ones() as usize;
        let mut next = sums.clone();
        next.resize(sums.len() + s, false);
        for (i, &ok) in sums.iter().enumerate() {
            if ok {
                next[i + s] = true;
            }
        }
        sums = next;
    }
    if sums.get(k).copied().unwrap_or(false) {
        return reject(Reason::Impossibility, format!("the target has an invariant {k}-subset"));
    }
    Ok(())
}

fn uint(v: &Value, key: &str) -> Check<usize> {
    match v.get(key).and_then(Value::as_u64) {
        Some(x) => Ok(x as usize),
        None => reject(Reason::Schema, format!("missing or non-integer {key}")),
    }
}

fn full(d: usize) -> u64 {
    if d == 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

fn set_code(v: &Value, d: usize) -> Check<u64> {
    let Some(a) = v.as_array() else {
        return reject(Reason::Schema, "subset is not an array");
    };
    let mut code = 0u64;
    let mut last: Option<u64> = None;
    for x in a {
        let Some(i) = x.as_u64() else {
            return reject(Reason::Schema, "subset element is not an integer");
        };
        if i as usize >= d || last.is_some_and(|l| l >= i) {
            return reject(Reason::Schema, "subset must be strictly increasing and inside the domain");
        }
        last = Some(i);
        code |= 1 << i;
    }
    Ok(code)
}

fn parse_cycles(s: &str, d: usize) -> Check<Vec<usize>> {
    let mut images: Vec<usize> = (0..d).collect();
    let mut seen = vec![false; d];
    let s = s.trim();
    if s == "()" {
        return Ok(images);
    }
    let mut rest = s;
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('(') else {
            return reject(Reason::Group, format!("bad cycle string {s:?}"));
        };
        let Some(end) = body.find(')') else {
            return reject(Reason::Group, format!("unclosed cycle in {s:?}"));
        };
        let mut pts = Vec::new();
        for tok in body[..end].split_whitespace() {
            match tok.parse::<usize>() {
                Ok(x) if x < d && !seen[x] => {
                    seen[x] = true;
                    pts.push(x);
                }
                _ => return reject(Reason::Group, format!("bad point {tok:?} in {s:?}")),
            }
        }
        for i in 0..pts.len() {
            images[pts[i]] = pts[(i + 1) % pts.len()];
        }
        rest = body[end + 1..].trim_start();
    }
    Ok(images)
}

fn closure(gens: &[Vec<usize>], d: usize) -> Check<Vec<Vec<usize>>> {
    let id: Vec<usize> = (0..d).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut out = vec![id];
    let mut i = 0;
    while i < out.len() {
        for g in gens {
            let next: Vec<usize> = out[i].iter().map(|&x| g[x]).collect();
            if seen.insert(next.clone()) {
                if out.len() >= MAX_ELEMENTS {
                    return reject(Reason::Group, "group too large to check");
                }
                out.push(next);
            }
        }
        i += 1;
    }
    Ok(out)
}

fn image(p: &[usize], s: u64) -> u64 {
    let mut out = 0;
    for (i, &pi) in p.iter().enumerate() {
        if s >> i & 1 == 1 {
            out |= 1 << pi;
        }
    }
    out
}

fn check_explicit(rows: &[Value], d: usize, n: usize, group: &[Vec<usize>]) -> Check<()> {
    if d > MAX_EXPLICIT {
        return reject(Reason::Table, "explicit tables are limited to 20 points");
    }
    let mut table: HashMap<u64, u64> = HashMap::new();
    for row in rows {
        let pair = row.as_array().filter(|a| a.len() == 2);
        let Some(pair) = pair else {
            return reject(Reason::Schema, "table rows must be [subset, subset]");
        };
        let (l, s) = (set_code(&pair[0], d)?, set_code(&pair[1], d)?);
        if (l.count_ones() as usize) <= n {
            return reject(Reason::Table, format!("entry for a set of size {} <= arity", l.count_ones()));
        }
        if s & !l != 0 || s.count_ones() as usize != n {
            return reject(Reason::Table, format!("selected set is not an {n}-subset of its key"));
        }
        if table.insert(l, s).is_some() {
            return reject(Reason::Table, "duplicate entry");
        }
    }
    let expected = (0..=full(d)).filter(|c| c.count_ones() as usize > n).count();
    if table.len() != expected {
        return reject(Reason::Table, format!("table has {} entries, needs {expected}", table.len()));
    }
    for p in group {
        for (&l, &s) in &table {
            if table.get(&image(p, l)) != Some(&image(p, s)) {
                return reject(Reason::Equivariance, "a group element does not commute with the table");
            }
        }
    }
    Ok(())
}

fn check_orbit_generated(oc: &Value, d: usize, n: usize, group: &[Vec<usize>]) -> Check<()> {
    if oc.get("arity").and_then(Value::as_u64) != Some(n as u64) {
        return reject(Reason::Table, "orbit certificate arity differs from the claim");
    }
    let Some(reps) = oc.get("orbit_reps").and_then(Value::as_array) else {
        return reject(Reason::Schema, "missing orbit_reps");
    };
    let mut covered = vec![0u64; (full(d) as usize + 64) / 64];
    let mut count = 0usize;
    for e in reps {
        let l = set_code(e.get("rep").unwrap_or(&Value::Null), d)?;
        let Some(sel) = e.get("selected").filter(|s| !s.is_null()) else {
            return reject(Reason::Table, "an orbit representative has no selection");
        };
        let s = set_code(sel, d)?;
        if (l.count_ones() as usize) <= n || s & !l != 0 || s.count_ones() as usize != n {
            return reject(Reason::Table, "representative selection has the wrong shape");
        }
        let mut orbit: HashSet<u64> = HashSet::new();
        for p in group {
            let pl = image(p, l);
            if pl == l && image(p, s) != s {
                return reject(Reason::Equivariance, "the stabilizer moves the selected subset");
            }
            orbit.insert(pl);
        }
        for pl in orbit {
            let (w, b) = ((pl / 64) as usize, pl % 64);
            if covered[w] >> b & 1 == 1 {
                return reject(Reason::Table, "orbit representatives overlap");
            }
            covered[w] |= 1 << b;
            count += 1;
        }
    }
    let expected = (0..=full(d)).filter(|c| c.count_ones() as usize > n).count();
    if count != expected {
        return reject(Reason::Table, format!("orbits cover {count} sets, need {expected}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deciders::{decide_local_nrc, decide_local_rc, Mode, SelTable};

    #[test]
    fn accepts_decider_output() {
        let w = decide_local_rc(4, 6, Mode::Complete).unwrap().witness.unwrap();
        assert_eq!(verify_certificate(&w), Ok(()));
        let w = decide_local_rc(4, 3, Mode::Complete).unwrap().witness.unwrap();
        assert_eq!(verify_certificate(&w), Ok(()));
        let w = decide_local_nrc(2, 3, 8, Mode::Complete).unwrap().witness.unwrap();
        assert_eq!(verify_certificate(&w), Ok(()));
    }

    #[test]
    fn rejects_broken_equivariance() {
        let mut w = decide_local_rc(4, 6, Mode::Complete).unwrap().witness.unwrap();
        let SelTable::Explicit(rows) = &mut w.sel_table else { panic!() };
        let full = rows.iter_mut().find(|(l, _)| l.len() == 6).unwrap();
        // swap one selected point for an unselected one
        let out = full.0.difference(full.1).first().unwrap();
        let inn = full.1.first().unwrap();
        let mut s = full.1.difference(crate::SubsetCode::singleton(inn));
        s.insert(out);
        full.1 = s;
        assert_eq!(verify_certificate(&w).unwrap_err().reason, Reason::Equivariance);
    }

    #[test]
    fn rejects_schema_and_parse_errors() {
        assert_eq!(verify_json("{").unwrap_err().reason, Reason::Parse);
        let w = decide_local_rc(4, 6, Mode::Complete).unwrap().witness.unwrap();
        let text = w.to_json().replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\"");
        assert_eq!(verify_json(&text).unwrap_err().reason, Reason::Schema);
    }

    #[test]
    fn parses_cycles_independently() {
        assert_eq!(parse_cycles("(0 2)(1 3)", 4).unwrap(), vec![2, 3, 0, 1]);
        assert_eq!(parse_cycles("()", 2).unwrap(), vec![0, 1]);
        assert!(parse_cycles("(0 0)", 2).is_err());
        assert!(parse_cycles("(0 5)", 2).is_err());
    }
}
