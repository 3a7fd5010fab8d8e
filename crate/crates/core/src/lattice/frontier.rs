use std::collections::BTreeMap;

use super::increment::{incl_excl_coefficients, Increment};
use super::set::{IndexFamily, IndexSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The frontier `Cp(C)` of an increment with inclusion–exclusion weights and
/// the `ψ_C` self-map.
///
/// `weights[i]` is the coefficient of `sets[i]` in the expansion of the
/// indicator of `B`, so `Δx_B = Σ weights[i]·x_{Cp_i}`. For increments in
/// general position the weights are ±1. `psi` has length `p + 1`; index 0
/// stands for `A` and values are 1-based frontier positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontier<T> {
    outer: IndexSet<T>,
    sets: Vec<IndexSet<T>>,
    weights: Vec<i64>,
    psi: Vec<usize>,
}

impl<T: Scalar> Frontier<T> {
    pub fn new(family: &IndexFamily<T>, inc: &Increment<T>) -> Result<Self> {
        let outer = inc.outer().clone();
        if inc.is_empty() {
            return Ok(Frontier { outer: outer.clone(), sets: vec![outer], weights: vec![1], psi: vec![1, 1] });
        }
        let mut parts = inc.parts().to_vec();
        sort_by_distance(family, &outer, &mut parts);
        let coeffs = incl_excl_coefficients(family, &parts)?;

        let mut sets = parts.clone();
        let mut weights = Vec::with_capacity(coeffs.len());
        for p in &parts {
            let c = coeffs[p];
            if c != 1 {
                return Err(Error::Inconsistent(format!("part {p} has coefficient {c}")));
            }
            weights.push(1);
        }
        // remaining intersections, in descending canonical order
        for (u, &c) in coeffs.iter().rev() {
            if parts.contains(u) {
                continue;
            }
            let interior = parts.iter().any(|p| family.strictly_inside(u, p));
            match (interior, c) {
                (true, 0) => {}
                (true, _) => {
                    return Err(Error::Inconsistent(format!("interior set {u} carries coefficient {c}")));
                }
                // boundary sets cancelling to zero only arise on flat faces with tied corners
                (false, 0) => {}
                (false, _) => {
                    sets.push(u.clone());
                    weights.push(c);
                }
            }
        }
        let psi = psi_map(family, &sets, &weights)?;
        Ok(Frontier { outer, sets, weights, psi })
    }

    pub fn outer(&self) -> &IndexSet<T> {
        &self.outer
    }

    pub fn sets(&self) -> &[IndexSet<T>] {
        &self.sets
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn psi(&self) -> &[usize] {
        &self.psi
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn weight(&self, i: usize) -> T {
        T::from_i64(self.weights[i]).unwrap()
    }

    /// `Δx_B = Σ w_i x_{Cp_i}`.
    pub fn delta(&self, vx: &[T]) -> Result<T> {
        if vx.len() != self.sets.len() {
            return Err(Error::ArityMismatch { expected: self.sets.len(), got: vx.len() });
        }
        Ok(vx.iter().enumerate().fold(T::zero(), |s, (i, &x)| s + self.weight(i) * x))
    }

    fn set_at(&self, i: usize) -> &IndexSet<T> {
        if i == 0 {
            &self.outer
        } else {
            &self.sets[i - 1]
        }
    }

    /// `‖C‖ = max_i d_H(Cp_i, ψ(Cp_i))` with `Cp_0 = A`.
    pub fn increment_norm(&self, family: &IndexFamily<T>) -> T {
        (0..self.psi.len()).fold(T::zero(), |m, i| m.max(family.hausdorff(self.set_at(i), self.set_at(self.psi[i]))))
    }

    /// `max_i |x_{Cp_i} − x_{ψ(Cp_i)}|` with `x_0 = x_A`.
    pub fn value_norm(&self, x_a: T, vx: &[T]) -> Result<T> {
        if vx.len() != self.sets.len() {
            return Err(Error::ArityMismatch { expected: self.sets.len(), got: vx.len() });
        }
        let at = |i: usize| if i == 0 { x_a } else { vx[i - 1] };
        Ok((0..self.psi.len()).fold(T::zero(), |m, i| m.max((at(i) - at(self.psi[i])).abs())))
    }
}

/// Sorts parts by ascending `d_H(outer, part)`, ties by canonical order.
pub fn sort_by_distance<T: Scalar>(family: &IndexFamily<T>, outer: &IndexSet<T>, parts: &mut [IndexSet<T>]) {
    parts.sort_by(|a, b| {
        let da = family.hausdorff(outer, a);
        let db = family.hausdorff(outer, b);
        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.cmp(b))
    });
}

/// `ψ_C`: frontier sets `i ≥ 2` sharing `V = Cp_1 ∩ Cp_i` form a group whose
/// weights cancel; every member maps to the group's largest index. For
/// groups of two this is the smallest `j > i` with the same trace.
fn psi_map<T: Scalar>(family: &IndexFamily<T>, sets: &[IndexSet<T>], weights: &[i64]) -> Result<Vec<usize>> {
    let p = sets.len();
    let mut psi = vec![1; p + 1];
    let mut groups: BTreeMap<IndexSet<T>, Vec<usize>> = BTreeMap::new();
    for i in 2..=p {
        let v = family.intersect(&sets[0], &sets[i - 1])?;
        groups.entry(v).or_default().push(i);
    }
    for (v, members) in groups {
        let total: i64 = members.iter().map(|&i| weights[i - 1]).sum();
        if members.len() < 2 || total != 0 {
            return Err(Error::Inconsistent(format!("no ψ partner for frontier trace {v}")));
        }
        let hub = *members.last().unwrap();
        for i in members {
            psi[i] = hub;
        }
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::set::Tree;

    fn r(c: &[f64]) -> IndexSet<f64> {
        IndexSet::rect_f64(c)
    }

    #[test]
    fn two_part_staircase() {
        let f = IndexFamily::rect(2);
        let inc = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[2.0, 1.0]), r(&[1.0, 2.0])]).unwrap();
        let fr = Frontier::new(&f, &inc).unwrap();
        assert_eq!(fr.sets(), &[r(&[2.0, 1.0]), r(&[1.0, 2.0]), r(&[1.0, 1.0])]);
        assert_eq!(fr.weights(), &[1, 1, -1]);
        assert_eq!(fr.psi(), &[1, 1, 3, 3]);
        assert_eq!(fr.increment_norm(&f), 1.0);
        assert_eq!(fr.delta(&[2.0, 3.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn single_part() {
        let f = IndexFamily::rect(2);
        let inc = Increment::new(&f, r(&[2.0, 3.0]), vec![r(&[1.0, 1.0])]).unwrap();
        let fr = Frontier::new(&f, &inc).unwrap();
        assert_eq!(fr.sets(), &[r(&[1.0, 1.0])]);
        assert_eq!(fr.weights(), &[1]);
        assert_eq!(fr.psi(), &[1, 1]);
        assert_eq!(fr.increment_norm(&f), f.hausdorff(&r(&[2.0, 3.0]), &r(&[1.0, 1.0])));
    }

    #[test]
    fn three_part_staircase_excludes_interior() {
        let f = IndexFamily::rect(2);
        let stair = vec![r(&[3.0, 1.0]), r(&[2.0, 2.0]), r(&[1.0, 3.0])];
        let inc = Increment::new(&f, r(&[3.0, 3.0]), stair).unwrap();
        let fr = Frontier::new(&f, &inc).unwrap();
        assert_eq!(fr.len(), 5);
        assert!(!fr.sets().contains(&r(&[1.0, 1.0])));
        let mut ws = fr.weights().to_vec();
        ws.sort();
        assert_eq!(ws, vec![-1, -1, 1, 1, 1]);
    }

    #[test]
    fn empty_increment_frontier() {
        let f = IndexFamily::rect(2);
        let fr = Frontier::new(&f, &Increment::empty(r(&[1.0, 1.0]))).unwrap();
        assert_eq!(fr.sets(), &[r(&[1.0, 1.0])]);
        assert_eq!(fr.increment_norm(&f), 0.0);
        assert_eq!(fr.value_norm(0.5, &[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn tree_frontier_is_deepest_part() {
        let f = IndexFamily::<f64>::tree(Tree::binary(3));
        let inc = Increment::new(&f, IndexSet::Node(9), vec![IndexSet::Node(1), IndexSet::Node(4)]).unwrap();
        let fr = Frontier::new(&f, &inc).unwrap();
        assert_eq!(fr.sets(), &[IndexSet::Node(4)]);
    }

    #[test]
    fn tied_corners_give_larger_weight() {
        let f = IndexFamily::rect(3);
        let parts = vec![r(&[3.0, 1.0, 1.0]), r(&[1.0, 3.0, 1.0]), r(&[1.0, 1.0, 3.0])];
        let inc = Increment::new(&f, r(&[3.0, 3.0, 3.0]), parts).unwrap();
        let fr = Frontier::new(&f, &inc).unwrap();
        let at = fr.sets().iter().position(|s| *s == r(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(fr.weights()[at], -2);
    }
}
