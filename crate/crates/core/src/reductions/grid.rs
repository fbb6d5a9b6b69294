//! The edge grid used when a member splits into traces of sizes 3 and 2.
//!
//! For a member with `Y = A ∩ y` (three atoms) and `Z = A ∩ z` (two atoms)
//! the edges are `Y × Z`. Row `F_a` holds the two edges through `a ∈ Y`,
//! column `G_b` the three edges through `b ∈ Z`. Edge ids are global and
//! dense: member `j` owns ids `6j .. 6j + 6`, row-major.

use crate::error::{Error, Result};

/// Which trace a grid-derived split refines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GridSplit {
    /// A proper non-empty subset of the 3-atom trace.
    Rows(Vec<u32>),
    /// A proper non-empty subset of the 2-atom trace.
    Cols(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMember {
    pub y: [u32; 3],
    pub z: [u32; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeGrid {
    members: Vec<GridMember>,
    degrees: Option<Vec<[usize; 2]>>,
}

/// Builds the grid from per-member traces, which must have sizes exactly 3 and 2.
pub fn build_edge_grid(traces: &[(Vec<u32>, Vec<u32>)]) -> Result<EdgeGrid> {
    let mut members = Vec::with_capacity(traces.len());
    for (j, (y, z)) in traces.iter().enumerate() {
        if y.len() != 3 || z.len() != 2 {
            return Err(Error::Precondition(format!(
                "member {j} has trace profile ({},{}), expected (3,2)",
                y.len(),
                z.len()
            )));
        }
        let mut y = [y[0], y[1], y[2]];
        let mut z = [z[0], z[1]];
        y.sort_unstable();
        z.sort_unstable();
        members.push(GridMember { y, z });
    }
    Ok(EdgeGrid {
        members,
        degrees: None,
    })
}

/// The three ways to pick two rows out of three.
const ROW_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl EdgeGrid {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, j: usize) -> &GridMember {
        &self.members[j]
    }

    pub fn edge_id(&self, j: usize, row: usize, col: usize) -> u32 {
        (6 * j + 2 * row + col) as u32
    }

    /// `(a, b)` atoms of an edge id.
    pub fn edge(&self, id: u32) -> (u32, u32) {
        let id = id as usize;
        let m = &self.members[id / 6];
        (m.y[(id % 6) / 2], m.z[id % 2])
    }

    pub fn owner(&self, id: u32) -> usize {
        id as usize / 6
    }

    /// `E_j`, sorted.
    pub fn edges(&self, j: usize) -> Vec<u32> {
        (0..6).map(|k| (6 * j + k) as u32).collect()
    }

    pub fn all_edges(&self) -> Vec<u32> {
        (0..6 * self.members.len() as u32).collect()
    }

    /// `F^j_a` for the `row`-th atom of the 3-trace.
    pub fn row(&self, j: usize, row: usize) -> [u32; 2] {
        [self.edge_id(j, row, 0), self.edge_id(j, row, 1)]
    }

    /// `G^j_b` for the `col`-th atom of the 2-trace.
    pub fn col(&self, j: usize, col: usize) -> [u32; 3] {
        [
            self.edge_id(j, 0, col),
            self.edge_id(j, 1, col),
            self.edge_id(j, 2, col),
        ]
    }

    /// `F^j_a ∪ F^j_a'` for each pair of rows, sorted.
    pub fn row_pair(&self, j: usize, pair: usize) -> Vec<u32> {
        let (r, s) = ROW_PAIRS[pair];
        let mut v: Vec<u32> = self.row(j, r).into_iter().chain(self.row(j, s)).collect();
        v.sort_unstable();
        v
    }

    /// The 7-edge set `G^j_b ∪ F^i_a ∪ F^i_a'`, sorted.
    pub fn probe(&self, j: usize, col: usize, i: usize, pair: usize) -> Vec<u32> {
        let mut v = self.row_pair(i, pair);
        v.extend(self.col(j, col));
        v.sort_unstable();
        v
    }

    /// Degree of every column among the `active` members, and stores it.
    ///
    /// `deg(G^j_b)` counts the row-pair unions `F^i_a ∪ F^i_a'` of other
    /// active members `i` for which the edge left out by the oracle on
    /// `G^j_b ∪ F^i_a ∪ F^i_a'` lies in the row-pair union. The oracle is asked
    /// for 6 of the 7 edges.
    pub fn compute_degrees(
        &mut self,
        active: &[bool],
        mut select: impl FnMut(&[u32]) -> Result<Vec<u32>>,
    ) -> Result<Vec<[usize; 2]>> {
        let m = self.members.len();
        let mut deg = vec![[0usize; 2]; m];
        for j in (0..m).filter(|&j| active[j]) {
            for col in 0..2 {
                for i in (0..m).filter(|&i| i != j && active[i]) {
                    for pair in 0..3 {
                        let s = self.probe(j, col, i, pair);
                        let left = left_out(&s, &select(&s)?)?;
                        if self.owner(left) == i {
                            deg[j][col] += 1;
                        }
                    }
                }
            }
        }
        self.degrees = Some(deg.clone());
        Ok(deg)
    }

    pub fn degrees(&self) -> Option<&[[usize; 2]]> {
        self.degrees.as_deref()
    }

    /// A proper non-empty subset of `E_j` determines a proper non-empty
    /// subset of one trace: the rows (or failing that, the columns) that
    /// meet it most often.
    pub fn split_from_edges(&self, j: usize, part: &[u32]) -> Option<GridSplit> {
        let inside: Vec<u32> = part.iter().copied().filter(|&e| self.owner(e) == j).collect();
        if inside.is_empty() || inside.len() == 6 {
            return None;
        }
        let m = &self.members[j];
        let mut rows = [0usize; 3];
        let mut cols = [0usize; 2];
        for &e in &inside {
            let k = e as usize % 6;
            rows[k / 2] += 1;
            cols[k % 2] += 1;
        }
        let top = |counts: &[usize], atoms: &[u32]| -> Option<Vec<u32>> {
            let max = *counts.iter().max()?;
            if counts.iter().all(|&c| c == max) {
                return None;
            }
            Some(
                atoms
                    .iter()
                    .zip(counts)
                    .filter(|(_, &c)| c == max)
                    .map(|(&a, _)| a)
                    .collect(),
            )
        };
        top(&rows, &m.y)
            .map(GridSplit::Rows)
            .or_else(|| top(&cols, &m.z).map(GridSplit::Cols))
    }
}

/// The single element of `s` missing from `kept`.
pub fn left_out(s: &[u32], kept: &[u32]) -> Result<u32> {
    let missing: Vec<u32> = s.iter().copied().filter(|e| !kept.contains(e)).collect();
    match missing.as_slice() {
        [e] => Ok(*e),
        _ => Err(Error::Malformed(format!(
            "expected one edge left out of {s:?}, oracle kept {kept:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reductions::oracle::{SeededOracle, SelectionOracle};

    fn traces(count: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
        (0..count)
            .map(|j| (vec![5 * j, 5 * j + 1, 5 * j + 2], vec![5 * j + 3, 5 * j + 4]))
            .collect()
    }

    #[test]
    fn one_member_shape() {
        let g = build_edge_grid(&traces(1)).unwrap();
        assert_eq!(g.edges(0).len(), 6);
        for c in 0..2 {
            assert_eq!(g.col(0, c).len(), 3);
        }
        for r in 0..3 {
            assert_eq!(g.row(0, r).len(), 2);
        }
        let mut all: Vec<u32> = (0..3).flat_map(|r| g.row(0, r)).collect();
        all.sort_unstable();
        assert_eq!(all, g.edges(0));
        assert_eq!(g.edge(g.edge_id(0, 2, 1)), (2, 4));
    }

    #[test]
    fn wrong_profile_rejected() {
        assert!(build_edge_grid(&[(vec![1, 2], vec![3, 4, 5])]).is_err());
    }

    #[test]
    fn zero_degrees_when_column_edge_dropped() {
        let mut g = build_edge_grid(&traces(4)).unwrap();
        let grid = g.clone();
        // Always leave out an edge of the column part: the one not owned by
        // the member contributing two rows.
        let deg = g
            .compute_degrees(&[true; 4], |s| {
                let owners: Vec<usize> = s.iter().map(|&e| grid.owner(e)).collect();
                let col_owner = *owners
                    .iter()
                    .find(|&&o| owners.iter().filter(|&&p| p == o).count() == 3)
                    .unwrap();
                let drop = *s.iter().find(|&&e| grid.owner(e) == col_owner).unwrap();
                Ok(s.iter().copied().filter(|&e| e != drop).collect())
            })
            .unwrap();
        assert!(deg.iter().all(|d| *d == [0, 0]));
    }

    #[test]
    fn seeded_degrees_bounded() {
        let mut g = build_edge_grid(&traces(10)).unwrap();
        let mut o = SeededOracle::new(1);
        let deg = g.compute_degrees(&[true; 10], |s| Ok(o.select(0, s, 6))).unwrap();
        let pairs = 3 * 9;
        assert!(deg.iter().flatten().all(|&d| d <= pairs));
        assert!(deg.iter().flatten().any(|&d| d > 0));
    }

    #[test]
    fn edge_subsets_split_a_trace() {
        let g = build_edge_grid(&traces(1)).unwrap();
        for mask in 1u32..63 {
            let part: Vec<u32> = (0..6).filter(|k| mask >> k & 1 == 1).collect();
            match g.split_from_edges(0, &part) {
                Some(GridSplit::Rows(q)) => assert!(!q.is_empty() && q.len() < 3),
                Some(GridSplit::Cols(q)) => assert_eq!(q.len(), 1),
                None => panic!("mask {mask:#b} gave nothing"),
            }
        }
    }
}
