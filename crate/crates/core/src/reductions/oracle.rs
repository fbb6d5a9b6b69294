//! Selection oracles: the injected dependency every reduction is run against.
//!
//! An oracle answers two kinds of query. `extract` plays the role of one
//! application of the selection principle to a ground set `x`: it returns a
//! non-empty subset `y ⊆ x` on which the oracle promises to select. `select`
//! then maps any subset `L ⊆ y` with `|L| > n` to an `n`-subset of `L`.
//! Ground sets live in one of three universes (atoms, member indices, grid
//! edges); items are plain `u32` ids inside their universe.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which kind of item an extraction ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Universe {
    Atoms,
    Indices,
    Edges,
}

impl fmt::Display for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Universe::Atoms => "atoms",
            Universe::Indices => "indices",
            Universe::Edges => "edges",
        })
    }
}

/// A selection oracle. Implementations must behave as functions: the same
/// `(app, l)` query must always get the same answer.
pub trait SelectionOracle {
    /// Non-empty subset of `x` (when `x` is non-empty) for application `app`.
    fn extract(&mut self, app: usize, universe: Universe, x: &[u32]) -> Vec<u32>;
    /// An `n`-subset of `l`, where `l` lies inside the set extracted for `app`.
    fn select(&mut self, app: usize, l: &[u32], n: usize) -> Vec<u32>;
}

impl<T: SelectionOracle + ?Sized> SelectionOracle for &mut T {
    fn extract(&mut self, app: usize, universe: Universe, x: &[u32]) -> Vec<u32> {
        (**self).extract(app, universe, x)
    }

    fn select(&mut self, app: usize, l: &[u32], n: usize) -> Vec<u32> {
        (**self).select(app, l, n)
    }
}

/// One logged oracle interaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OracleCall {
    Extract {
        app: usize,
        universe: Universe,
        input: Vec<u32>,
        output: Vec<u32>,
    },
    Select {
        app: usize,
        input: Vec<u32>,
        output: Vec<u32>,
    },
}

/// Extracts everything and selects the `n` least items.
#[derive(Clone, Copy, Debug, Default)]
pub struct LexOracle;

impl SelectionOracle for LexOracle {
    fn extract(&mut self, _app: usize, _universe: Universe, x: &[u32]) -> Vec<u32> {
        x.to_vec()
    }

    fn select(&mut self, _app: usize, l: &[u32], n: usize) -> Vec<u32> {
        l[..n].to_vec()
    }
}

/// Adversarial oracle driven by a seed. Extractions keep each item with
/// probability one half (never returning the empty set for a non-empty
/// ground set) and selections are uniform, memoized so the oracle stays a
/// function.
#[derive(Clone, Debug)]
pub struct SeededOracle {
    rng: ChaCha8Rng,
    memo: HashMap<(usize, Vec<u32>), Vec<u32>>,
}

impl SeededOracle {
    pub fn new(seed: u64) -> Self {
        SeededOracle {
            rng: ChaCha8Rng::seed_from_u64(seed),
            memo: HashMap::new(),
        }
    }
}

impl SelectionOracle for SeededOracle {
    fn extract(&mut self, _app: usize, _universe: Universe, x: &[u32]) -> Vec<u32> {
        let mut y: Vec<u32> = x.iter().copied().filter(|_| self.rng.gen_bool(0.5)).collect();
        if y.is_empty() && !x.is_empty() {
            y.push(x[self.rng.gen_range(0..x.len())]);
        }
        y
    }

    fn select(&mut self, app: usize, l: &[u32], n: usize) -> Vec<u32> {
        let key = (app, l.to_vec());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut out: Vec<u32> = l.choose_multiple(&mut self.rng, n).copied().collect();
        out.sort_unstable();
        self.memo.insert(key, out.clone());
        out
    }
}

/// Replays a logged trace, failing on the first query that departs from it.
#[derive(Clone, Debug)]
pub struct ReplayOracle {
    calls: Vec<OracleCall>,
    cursor: usize,
    diverged: Option<String>,
}

impl ReplayOracle {
    pub fn new(calls: Vec<OracleCall>) -> Self {
        ReplayOracle {
            calls,
            cursor: 0,
            diverged: None,
        }
    }

    /// Parses a JSON-lines trace as written by [`write_trace`].
    pub fn from_trace(text: &str) -> Result<Self> {
        Ok(Self::new(read_trace(text)?))
    }

    /// First divergence from the trace, if any.
    pub fn diverged(&self) -> Option<&str> {
        self.diverged.as_deref()
    }

    fn next(&mut self) -> Option<OracleCall> {
        let call = self.calls.get(self.cursor).cloned();
        self.cursor += 1;
        call
    }

    fn diverge(&mut self, what: String) {
        if self.diverged.is_none() {
            self.diverged = Some(what);
        }
    }
}

impl SelectionOracle for ReplayOracle {
    fn extract(&mut self, app: usize, universe: Universe, x: &[u32]) -> Vec<u32> {
        match self.next() {
            Some(OracleCall::Extract {
                app: a,
                universe: u,
                input,
                output,
            }) if a == app && u == universe && input == x => output,
            other => {
                self.diverge(format!("call {}: expected {:?}", self.cursor - 1, other));
                Vec::new()
            }
        }
    }

    fn select(&mut self, app: usize, l: &[u32], _n: usize) -> Vec<u32> {
        match self.next() {
            Some(OracleCall::Select {
                app: a,
                input,
                output,
            }) if a == app && input == l => output,
            other => {
                self.diverge(format!("call {}: expected {:?}", self.cursor - 1, other));
                Vec::new()
            }
        }
    }
}

/// Serializes calls as JSON lines.
pub fn write_trace(calls: &[OracleCall]) -> String {
    let mut out = String::new();
    for c in calls {
        out.push_str(&serde_json::to_string(c).expect("oracle call serializes"));
        out.push('\n');
    }
    out
}

/// Parses JSON lines written by [`write_trace`]; blank lines are skipped.
pub fn read_trace(text: &str) -> Result<Vec<OracleCall>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("trace line {}: {e}", i + 1)))
        })
        .collect()
}
