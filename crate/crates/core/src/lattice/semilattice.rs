use std::collections::{BTreeMap, BTreeSet};

use super::increment::{extremal_representation, Increment};
use super::set::{IndexFamily, IndexSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_CLOSURE_CAP: usize = 4096;

/// Which available set a topological numbering picks first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest canonical key first.
    #[default]
    Canonical,
    /// Largest canonical key first; an alternative valid numbering.
    Reversed,
}

/// A finite intersection-closed collection `A_0 = ∅', A_1, …, A_m` with a
/// consistent numbering (`A_j ⊆ A_i ⇒ j ≤ i`).
#[derive(Clone, Debug, PartialEq)]
pub struct Semilattice<T> {
    sets: Vec<IndexSet<T>>,
    index: BTreeMap<IndexSet<T>, usize>,
}

impl<T: Scalar> Semilattice<T> {
    /// Intersection closure of `{∅'} ∪ sets`, numbered canonically.
    pub fn closure(family: &IndexFamily<T>, sets: &[IndexSet<T>]) -> Result<Self> {
        Self::closure_with(family, sets, DEFAULT_CLOSURE_CAP, TieBreak::Canonical)
    }

    pub fn closure_with(
        family: &IndexFamily<T>,
        sets: &[IndexSet<T>],
        cap: usize,
        tie: TieBreak,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidParameter("closure of an empty list".into()));
        }
        for s in sets {
            family.check(s)?;
        }
        let mut members: BTreeSet<IndexSet<T>> = BTreeSet::new();
        let mut order: Vec<IndexSet<T>> = Vec::new();
        let mut queue: Vec<IndexSet<T>> = vec![family.empty_set()];
        queue.extend(sets.iter().cloned());
        while let Some(s) = queue.pop() {
            if members.contains(&s) {
                continue;
            }
            for other in &order {
                let meet = family.intersect(&s, other)?;
                if !members.contains(&meet) && meet != s {
                    queue.push(meet);
                }
            }
            members.insert(s.clone());
            order.push(s);
            if members.len() > cap {
                return Err(Error::ClosureTooLarge { cap });
            }
        }
        Ok(Self::number(family, members.into_iter().collect(), tie))
    }

    /// Consistent numbering of an intersection-closed list by Kahn's
    /// algorithm, choosing among available sets by `tie`.
    fn number(family: &IndexFamily<T>, sets: Vec<IndexSet<T>>, tie: TieBreak) -> Self {
        let n = sets.len();
        // sets arrive sorted by canonical key; indices are keys' ranks
        let below: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && family.subset(&sets[j], &sets[i]))
                    .collect()
            })
            .collect();
        let mut pending: Vec<usize> = below.iter().map(Vec::len).collect();
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, bs) in below.iter().enumerate() {
            for &j in bs {
                above[j].push(i);
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(&next) = match tie {
            TieBreak::Canonical => ready.iter().next(),
            TieBreak::Reversed => ready.iter().next_back(),
        } {
            ready.remove(&next);
            out.push(next);
            for &k in &above[next] {
                pending[k] -= 1;
                if pending[k] == 0 {
                    ready.insert(k);
                }
            }
        }
        let ordered: Vec<IndexSet<T>> = out.into_iter().map(|i| sets[i].clone()).collect();
        Self::from_ordered_unchecked(ordered)
    }

    fn from_ordered_unchecked(sets: Vec<IndexSet<T>>) -> Self {
        let index = sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Semilattice { sets, index }
    }

    /// Accepts an explicit ordering after validating every invariant.
    pub fn from_ordered(family: &IndexFamily<T>, sets: Vec<IndexSet<T>>) -> Result<Self> {
        let sl = Self::from_ordered_unchecked(sets);
        sl.check_invariants(family)?;
        Ok(sl)
    }

    /// Rectangle grid semilattice: `∅'` plus every corner of a full
    /// cartesian grid. Closed by construction, numbered canonically.
    pub fn rect_grid(family: &IndexFamily<T>, axes: &[Vec<T>], cap: usize) -> Result<Self> {
        let dim = family
            .dim()
            .ok_or_else(|| Error::Unsupported("grid sampling needs a rectangle family".into()))?;
        if axes.len() != dim {
            return Err(Error::ArityMismatch { expected: dim, got: axes.len() });
        }
        let size = axes.iter().map(Vec::len).product::<usize>();
        if size > cap {
            return Err(Error::GridTooLarge { size, cap });
        }
        let mut corners: Vec<Vec<T>> = vec![Vec::new()];
        for axis in axes {
            if axis.is_empty() {
                return Err(Error::InvalidParameter("empty grid axis".into()));
            }
            let mut next = Vec::with_capacity(corners.len() * axis.len());
            for c in &corners {
                for &t in axis {
                    let mut d = c.clone();
                    d.push(t);
                    next.push(d);
                }
            }
            corners = next;
        }
        let mut sets: Vec<IndexSet<T>> = corners.into_iter().map(IndexSet::Rect).collect();
        sets.push(family.empty_set());
        for s in &sets {
            family.check(s)?;
        }
        sets.sort();
        sets.dedup();
        // colexicographic order is a linear extension of componentwise order
        Ok(Self::from_ordered_unchecked(sets))
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[IndexSet<T>] {
        &self.sets
    }

    pub fn get(&self, i: usize) -> &IndexSet<T> {
        &self.sets[i]
    }

    pub fn position(&self, set: &IndexSet<T>) -> Option<usize> {
        self.index.get(set).copied()
    }

    /// `C_i = A_i \ (A_0 ∪ … ∪ A_{i−1})`, with parts reduced to maximal elements.
    pub fn left_neighborhood(&self, family: &IndexFamily<T>, i: usize) -> Result<Increment<T>> {
        if i == 0 || i >= self.sets.len() {
            return Err(Error::InvalidParameter(format!("left neighbourhood index {i} out of 1..{}", self.sets.len())));
        }
        let target = &self.sets[i];
        let parts = self.sets[..i]
            .iter()
            .map(|s| family.intersect(s, target))
            .collect::<Result<Vec<_>>>()?;
        let parts = extremal_representation(family, &parts);
        Increment::new(family, target.clone(), parts)
    }

    /// Closure, ∅'-first and consistent-numbering invariants.
    pub fn check_invariants(&self, family: &IndexFamily<T>) -> Result<()> {
        if self.sets.first() != Some(&family.empty_set()) {
            return Err(Error::Inconsistent("semilattice must start with the minimal set".into()));
        }
        if self.index.len() != self.sets.len() {
            return Err(Error::Inconsistent("semilattice contains duplicates".into()));
        }
        for (i, a) in self.sets.iter().enumerate() {
            for (j, b) in self.sets.iter().enumerate() {
                let meet = family.intersect(a, b)?;
                if !self.index.contains_key(&meet) {
                    return Err(Error::Inconsistent(format!("{a} ∩ {b} missing from semilattice")));
                }
                if j > i && family.subset(b, a) {
                    return Err(Error::Inconsistent(format!("{b} ⊆ {a} numbered after it")));
                }
            }
        }
        Ok(())
    }
}
