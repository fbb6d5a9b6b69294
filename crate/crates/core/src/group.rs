use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::perm::Perm;
use crate::subset::{SubsetCode, MAX_DOMAIN};

/// Guards for [`group_closure_with`].
#[derive(Clone, Copy, Debug)]
pub struct ClosureLimits {
    pub max_degree: usize,
    pub max_elements: usize,
}

impl Default for ClosureLimits {
    fn default() -> Self {
        ClosureLimits { max_degree: 12, max_elements: 1_000_000 }
    }
}

/// A permutation group given by generators, with its full element list cached.
#[derive(Clone)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Perm>,
    elements: Vec<Perm>,
    lookup: HashSet<Perm>,
}

impl PartialEq for PermGroup {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.elements == other.elements
    }
}
impl Eq for PermGroup {}

impl fmt::Debug for PermGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PermGroup(deg {}, order {}, gens [", self.degree, self.order())?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
        f.write_str("])")
    }
}

/// Closes `generators` under composition with the default limits.
pub fn group_closure(degree: usize, generators: &[Perm]) -> Result<PermGroup> {
    group_closure_with(degree, generators, ClosureLimits::default())
}

pub fn group_closure_with(degree: usize, generators: &[Perm], limits: ClosureLimits) -> Result<PermGroup> {
    if degree > MAX_DOMAIN {
        return Err(Error::DomainTooLarge(degree));
    }
    if degree > limits.max_degree {
        return Err(Error::BoundExceeded(format!(
            "closure degree {degree} exceeds limit {}",
            limits.max_degree
        )));
    }
    for g in generators {
        if g.degree() != degree {
            return Err(Error::DegreeMismatch { expected: degree, got: g.degree() });
        }
    }
    let id = Perm::identity(degree);
    let mut lookup: HashSet<Perm> = HashSet::new();
    let mut queue = VecDeque::new();
    lookup.insert(id.clone());
    queue.push_back(id);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = g.compose(&x);
            if !lookup.contains(&y) {
                if lookup.len() >= limits.max_elements {
                    return Err(Error::BoundExceeded(format!(
                        "group closure exceeds {} elements",
                        limits.max_elements
                    )));
                }
                lookup.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    let mut elements: Vec<Perm> = lookup.iter().cloned().collect();
    elements.sort_unstable();
    Ok(PermGroup { degree, generators: generators.to_vec(), elements, lookup })
}

impl PermGroup {
    pub fn trivial(degree: usize) -> PermGroup {
        group_closure_with(degree, &[], ClosureLimits { max_degree: MAX_DOMAIN, max_elements: 1 }).unwrap()
    }

    /// Builds a group from a known closed element list, picking a small generating set.
    pub(crate) fn from_closed_elements(degree: usize, mut elements: Vec<Perm>) -> PermGroup {
        elements.sort_unstable();
        let lookup: HashSet<Perm> = elements.iter().cloned().collect();
        let mut generators: Vec<Perm> = Vec::new();
        let mut span: HashSet<Perm> = HashSet::from([Perm::identity(degree)]);
        for e in &elements {
            if !span.contains(e) {
                generators.push(e.clone());
                span = close_set(&generators, degree);
            }
        }
        PermGroup { degree, generators, elements, lookup }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    /// Elements in sorted order.
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.lookup.contains(p)
    }

    pub fn is_subgroup_of(&self, other: &PermGroup) -> bool {
        self.degree == other.degree && self.generators.iter().all(|g| other.contains(g))
    }

    /// Points fixed by every element.
    pub fn fixed_points(&self) -> SubsetCode {
        let mut out = SubsetCode::EMPTY;
        for x in 0..self.degree {
            if self.generators.iter().all(|g| g.fixes_point(x)) {
                out.insert(x);
            }
        }
        out
    }

    pub fn is_fixed_point_free(&self) -> bool {
        self.fixed_points().is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        let n = self.order();
        self.elements.iter().any(|e| e.order() == n)
    }

    /// The orbit `{π(L) : π ∈ G}`, sorted by code.
    pub fn orbit_of_subset(&self, l: SubsetCode) -> Vec<SubsetCode> {
        let mut seen: HashSet<SubsetCode> = HashSet::from([l]);
        let mut queue = vec![l];
        while let Some(x) = queue.pop() {
            for g in &self.generators {
                let y = g.apply_subset(x);
                if seen.insert(y) {
                    queue.push(y);
                }
            }
        }
        let mut out: Vec<SubsetCode> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// The subgroup `{π ∈ G : π(L) = L}`.
    pub fn setwise_stabilizer(&self, l: SubsetCode) -> PermGroup {
        let els: Vec<Perm> = self.elements.iter().filter(|p| p.apply_subset(l) == l).cloned().collect();
        PermGroup::from_closed_elements(self.degree, els)
    }

    /// Orbit partition of `L` under the group; every generator must map `L` onto itself.
    pub fn orbits_on_points(&self, l: SubsetCode) -> Result<Vec<SubsetCode>> {
        if let Some(g) = self.generators.iter().find(|g| g.apply_subset(l) != l) {
            return Err(Error::Precondition(format!("generator {g} does not preserve {{{l}}}")));
        }
        Ok(point_orbits(&self.generators, l))
    }

    /// Point orbits on the whole domain.
    pub fn orbits(&self) -> Vec<SubsetCode> {
        point_orbits(&self.generators, SubsetCode::full(self.degree))
    }

    /// Sorted element list after conjugation by `x`.
    pub fn conjugated_elements(&self, x: &Perm) -> Vec<Perm> {
        let mut v: Vec<Perm> = self.elements.iter().map(|e| e.conjugate_by(x)).collect();
        v.sort_unstable();
        v
    }
}

/// Orbits of the group generated by `gens` on the points of `l` (assumed invariant).
pub(crate) fn point_orbits(gens: &[Perm], l: SubsetCode) -> Vec<SubsetCode> {
    let mut remaining = l;
    let mut out = Vec::new();
    while let Some(start) = remaining.first() {
        let mut orbit = SubsetCode::singleton(start);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for g in gens {
                let y = g.apply(x);
                if !orbit.contains(y) {
                    orbit.insert(y);
                    stack.push(y);
                }
            }
        }
        remaining = remaining.difference(orbit);
        out.push(orbit);
    }
    out
}

fn close_set(gens: &[Perm], degree: usize) -> HashSet<Perm> {
    let mut seen: HashSet<Perm> = HashSet::from([Perm::identity(degree)]);
    let mut queue = vec![Perm::identity(degree)];
    while let Some(x) = queue.pop() {
        for g in gens {
            let y = g.compose(&x);
            if seen.insert(y.clone()) {
                queue.push(y);
            }
        }
    }
    seen
}
