use std::collections::BTreeMap;

use super::set::{IndexFamily, IndexSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest number of parts handled by subset enumeration.
pub const MAX_PARTS: usize = 20;

/// An increment `C = A \ (B_1 ∪ … ∪ B_k)` with `B` in extremal representation.
///
/// The empty increment is stored as `A \ A` and flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct Increment<T> {
    outer: IndexSet<T>,
    parts: Vec<IndexSet<T>>,
    empty: bool,
}

impl<T: Scalar> Increment<T> {
    /// Builds `outer \ ∪ parts`. Parts are clipped to `outer` and reduced to
    /// their maximal elements.
    pub fn new(family: &IndexFamily<T>, outer: IndexSet<T>, parts: Vec<IndexSet<T>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidIncrement(format!("{outer} minus an empty union")));
        }
        family.check(&outer)?;
        let mut clipped = Vec::with_capacity(parts.len());
        for p in &parts {
            family.check(p)?;
            clipped.push(family.intersect(p, &outer)?);
        }
        let parts = extremal_representation(family, &clipped);
        if parts.iter().any(|p| *p == outer) {
            return Ok(Self::empty(outer));
        }
        Ok(Increment { outer, parts, empty: false })
    }

    /// `A \ ∅'`.
    pub fn simple(family: &IndexFamily<T>, outer: IndexSet<T>) -> Result<Self> {
        let base = family.empty_set();
        Self::new(family, outer, vec![base])
    }

    pub fn empty(outer: IndexSet<T>) -> Self {
        Increment { parts: vec![outer.clone()], outer, empty: true }
    }

    pub fn outer(&self) -> &IndexSet<T> {
        &self.outer
    }

    pub fn parts(&self) -> &[IndexSet<T>] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.parts.iter().map(|p| p.label()).collect();
        format!("{} \\ {{{}}}", self.outer.label(), parts.join(", "))
    }

    /// Whether `set ∩ C = ∅`, i.e. `set ∩ A ⊆ B`.
    pub fn disjoint_from(&self, family: &IndexFamily<T>, set: &IndexSet<T>) -> Result<bool> {
        if self.empty {
            return Ok(true);
        }
        let cut = family.intersect(set, &self.outer)?;
        Ok(self.parts.iter().any(|p| family.subset(&cut, p)))
    }

    /// Applies the shift `θ_u` partwise.
    pub fn shifted(&self, family: &IndexFamily<T>, u: &IndexSet<T>) -> Result<Self> {
        let outer = family.shift(&self.outer, u)?;
        if self.empty {
            return Ok(Self::empty(outer));
        }
        let parts = self
            .parts
            .iter()
            .map(|p| family.shift(p, u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(family, outer, parts)
    }
}

/// Maximal elements of `parts` under inclusion, deduplicated, in canonical order.
pub fn extremal_representation<T: Scalar>(family: &IndexFamily<T>, parts: &[IndexSet<T>]) -> Vec<IndexSet<T>> {
    let mut sorted: Vec<IndexSet<T>> = parts.to_vec();
    sorted.sort();
    sorted.dedup();
    let keep: Vec<bool> = sorted
        .iter()
        .enumerate()
        .map(|(i, a)| {
            !sorted
                .iter()
                .enumerate()
                .any(|(j, b)| i != j && family.subset(a, b))
        })
        .collect();
    sorted
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

/// Inclusion–exclusion coefficients over all nonempty subsets of `parts`:
/// `coeff(U) = Σ_{S : ∩S = U} (−1)^{|S|+1}`. Zero coefficients are kept.
pub fn incl_excl_coefficients<T: Scalar>(
    family: &IndexFamily<T>,
    parts: &[IndexSet<T>],
) -> Result<BTreeMap<IndexSet<T>, i64>> {
    if parts.len() > MAX_PARTS {
        return Err(Error::TooManyParts { k: parts.len(), max: MAX_PARTS });
    }
    let mut coeffs = BTreeMap::new();
    // depth-first over subsets, carrying the running intersection
    fn walk<T: Scalar>(
        family: &IndexFamily<T>,
        parts: &[IndexSet<T>],
        start: usize,
        current: &IndexSet<T>,
        size: usize,
        out: &mut BTreeMap<IndexSet<T>, i64>,
    ) -> Result<()> {
        let sign = if size % 2 == 1 { 1 } else { -1 };
        *out.entry(current.clone()).or_insert(0) += sign;
        for j in start..parts.len() {
            let next = family.intersect(current, &parts[j])?;
            walk(family, parts, j + 1, &next, size + 1, out)?;
        }
        Ok(())
    }
    for (i, p) in parts.iter().enumerate() {
        walk(family, parts, i + 1, p, 1, &mut coeffs)?;
    }
    Ok(coeffs)
}

/// `m(∪ parts)` by subset inclusion–exclusion.
pub fn union_measure<T: Scalar>(family: &IndexFamily<T>, parts: &[IndexSet<T>]) -> Result<T> {
    let coeffs = incl_excl_coefficients(family, parts)?;
    Ok(coeffs
        .iter()
        .filter(|(_, &c)| c != 0)
        .fold(T::zero(), |s, (u, &c)| s + T::from_i64(c).unwrap() * family.set_measure(u)))
}

/// `m(C) = m(A) − m(∪B)`, clamped at zero; negative values beyond roundoff are errors.
pub fn measure<T: Scalar>(family: &IndexFamily<T>, inc: &Increment<T>) -> Result<T> {
    if inc.is_empty() {
        return Ok(T::zero());
    }
    let outer = family.set_measure(inc.outer());
    let value = outer - union_measure(family, inc.parts())?;
    let tol = T::lit(1e-12) * T::one().max(outer.abs());
    if value < -tol {
        return Err(Error::NegativeMeasure { value: value.as_f64(), context: inc.label() });
    }
    Ok(value.max(T::zero()))
}

/// Splits `C` along `A'` into `C' = C ∩ A'` and `C'' = C \ A'`.
///
/// When `A' ⊄ A` the split is taken along `A ∩ A'`, which is the same set
/// operation; in particular `A ⊆ A'` gives `(C, ∅)`.
pub fn split<T: Scalar>(
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    a_prime: &IndexSet<T>,
) -> Result<(Increment<T>, Increment<T>)> {
    family.check(a_prime)?;
    let cut = family.intersect(a_prime, inc.outer())?;
    if inc.is_empty() {
        return Ok((Increment::empty(cut), inc.clone()));
    }
    let inner_parts = inc
        .parts()
        .iter()
        .map(|p| family.intersect(p, &cut))
        .collect::<Result<Vec<_>>>()?;
    let first = Increment::new(family, cut.clone(), inner_parts)?;
    let mut outer_parts = inc.parts().to_vec();
    outer_parts.push(cut);
    let second = Increment::new(family, inc.outer().clone(), outer_parts)?;
    Ok((first, second))
}

/// Randomised validator for the shape hypothesis: if every probe point of
/// `a` lies in `∪ covers` then `a` must lie in a single cover. Probe points
/// are the `resolution`-grid of each rectangle corner, every node of a
/// branch, and products of factor probes.
pub fn shape_check<T: Scalar>(
    family: &IndexFamily<T>,
    a: &IndexSet<T>,
    covers: &[IndexSet<T>],
    resolution: usize,
) -> Result<bool> {
    family.check(a)?;
    for c in covers {
        family.check(c)?;
    }
    let points = probe_points(family, a, resolution.max(1));
    let covered = points
        .iter()
        .all(|pt| covers.iter().any(|c| point_in(family, pt, c)));
    if !covered {
        return Ok(true);
    }
    Ok(covers.iter().any(|c| family.subset(a, c)))
}

/// A point of the ground space, encoded as a degenerate index set coordinate list.
#[derive(Clone, Debug)]
enum Point<T> {
    Coords(Vec<T>),
    Node(usize),
    Prod(Vec<Point<T>>),
}

fn probe_points<T: Scalar>(family: &IndexFamily<T>, a: &IndexSet<T>, res: usize) -> Vec<Point<T>> {
    use super::set::FamilyKind;
    match (family.kind(), a) {
        (FamilyKind::Rect { .. }, IndexSet::Rect(c)) => {
            let mut pts = vec![Vec::new()];
            for &t in c {
                let mut next = Vec::with_capacity(pts.len() * (res + 1));
                for p in &pts {
                    for s in 0..=res {
                        let mut q: Vec<T> = p.clone();
                        q.push(t * T::from_usize(s).unwrap() / T::from_usize(res).unwrap());
                        next.push(q);
                    }
                }
                pts = next;
            }
            pts.into_iter().map(Point::Coords).collect()
        }
        (FamilyKind::Tree(t), IndexSet::Node(v)) => {
            let mut out = vec![Point::Node(*v)];
            let mut cur = *v;
            while let Some(p) = t.parent(cur) {
                out.push(Point::Node(p));
                cur = p;
            }
            out
        }
        (FamilyKind::Product(fs), IndexSet::Prod(cs)) => {
            let mut pts: Vec<Vec<Point<T>>> = vec![Vec::new()];
            for (f, c) in fs.iter().zip(cs) {
                let factor = probe_points(f, c, res);
                let mut next = Vec::new();
                for p in &pts {
                    for q in &factor {
                        let mut r = p.clone();
                        r.push(q.clone());
                        next.push(r);
                    }
                }
                pts = next;
            }
            pts.into_iter().map(Point::Prod).collect()
        }
        _ => Vec::new(),
    }
}

fn point_in<T: Scalar>(family: &IndexFamily<T>, pt: &Point<T>, set: &IndexSet<T>) -> bool {
    use super::set::FamilyKind;
    match (family.kind(), pt, set) {
        (FamilyKind::Rect { .. }, Point::Coords(x), IndexSet::Rect(c)) => x.iter().zip(c).all(|(p, q)| p <= q),
        (FamilyKind::Tree(t), Point::Node(v), IndexSet::Node(w)) => t.is_ancestor(*v, *w),
        (FamilyKind::Product(fs), Point::Prod(ps), IndexSet::Prod(cs)) => fs
            .iter()
            .zip(ps.iter().zip(cs))
            .all(|(f, (p, c))| point_in(f, p, c)),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::set::Tree;

    fn r(c: &[f64]) -> IndexSet<f64> {
        IndexSet::rect_f64(c)
    }

    #[test]
    fn measure_of_two_part_staircase() {
        let f = IndexFamily::rect(2);
        let inc = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[2.0, 1.0]), r(&[1.0, 2.0])]).unwrap();
        // 4 − (2 + 2 − 1)
        assert_eq!(measure(&f, &inc).unwrap(), 1.0);
        assert_eq!(measure(&f, &Increment::empty(r(&[2.0, 2.0]))).unwrap(), 0.0);
    }

    #[test]
    fn additive_product_measure() {
        let f = IndexFamily::product_additive(vec![IndexFamily::rect(1), IndexFamily::rect(1)], vec![2.0, 3.0]).unwrap();
        let a = IndexSet::Prod(vec![r(&[1.0]), r(&[1.0])]);
        let inc = Increment::simple(&f, a).unwrap();
        assert_eq!(measure(&f, &inc).unwrap(), 5.0);
    }

    #[test]
    fn too_many_parts_is_rejected() {
        let f = IndexFamily::rect(21);
        let parts: Vec<IndexSet<f64>> = (0..21)
            .map(|i| {
                let mut c = vec![2.0; 21];
                c[i] = 1.0;
                IndexSet::Rect(c)
            })
            .collect();
        let inc = Increment::new(&f, IndexSet::Rect(vec![2.0; 21]), parts).unwrap();
        assert!(matches!(measure(&f, &inc), Err(Error::TooManyParts { k: 21, .. })));
    }

    #[test]
    fn extremal_examples() {
        let f = IndexFamily::rect(2);
        assert_eq!(extremal_representation(&f, &[r(&[1.0, 1.0]), r(&[2.0, 1.0])]), vec![r(&[2.0, 1.0])]);
        let both = extremal_representation(&f, &[r(&[1.0, 2.0]), r(&[2.0, 1.0])]);
        assert_eq!(both, vec![r(&[2.0, 1.0]), r(&[1.0, 2.0])]);
        let chain: Vec<IndexSet<f64>> = (1..6).map(|i| r(&[i as f64, 0.5 * i as f64])).collect();
        assert_eq!(extremal_representation(&f, &chain), vec![r(&[5.0, 2.5])]);
    }

    #[test]
    fn coefficient_examples() {
        let f = IndexFamily::rect(2);
        let c = incl_excl_coefficients(&f, &[r(&[2.0, 1.0]), r(&[1.0, 2.0])]).unwrap();
        assert_eq!(c[&r(&[2.0, 1.0])], 1);
        assert_eq!(c[&r(&[1.0, 2.0])], 1);
        assert_eq!(c[&r(&[1.0, 1.0])], -1);
        let stair = [r(&[3.0, 1.0]), r(&[2.0, 2.0]), r(&[1.0, 3.0])];
        let c = incl_excl_coefficients(&f, &stair).unwrap();
        assert_eq!(c[&r(&[1.0, 1.0])], 0);
        assert_eq!(c[&r(&[2.0, 1.0])], -1);
        assert_eq!(c[&r(&[1.0, 2.0])], -1);
        assert_eq!(c.values().filter(|&&v| v != 0).count(), 5);
    }

    #[test]
    fn split_example_and_degenerate_case() {
        let f = IndexFamily::rect(2);
        let c = Increment::simple(&f, r(&[2.0, 2.0])).unwrap();
        let (c1, c2) = split(&f, &c, &r(&[1.0, 1.0])).unwrap();
        assert_eq!(c1, Increment::simple(&f, r(&[1.0, 1.0])).unwrap());
        assert_eq!(c2, Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[1.0, 1.0])]).unwrap());
        // A' inside B: C' empty, C'' = C
        let c = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[2.0, 1.0]), r(&[1.0, 2.0])]).unwrap();
        let (c1, c2) = split(&f, &c, &r(&[0.5, 1.5])).unwrap();
        assert!(c1.is_empty());
        assert_eq!(c2, c);
    }

    #[test]
    fn increment_construction_clips_and_flags_empty() {
        let f = IndexFamily::rect(2);
        let inc = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[3.0, 1.0])]).unwrap();
        assert_eq!(inc.parts(), &[r(&[2.0, 1.0])]);
        let e = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[3.0, 3.0])]).unwrap();
        assert!(e.is_empty());
        assert!(Increment::new(&f, r(&[2.0, 2.0]), vec![]).is_err());
    }

    #[test]
    fn shape_check_examples() {
        let f = IndexFamily::rect(2);
        assert!(shape_check(&f, &r(&[1.0, 1.0]), &[r(&[2.0, 1.0]), r(&[1.0, 2.0])], 4).unwrap());
        assert!(shape_check(&f, &r(&[2.0, 2.0]), &[r(&[2.0, 1.0]), r(&[1.0, 2.0])], 4).unwrap());
        let t = IndexFamily::<f64>::tree(Tree::binary(3));
        for a in 0..15 {
            for b in 0..15 {
                for c in 0..15 {
                    let covers = [IndexSet::Node(b), IndexSet::Node(c)];
                    assert!(shape_check(&t, &IndexSet::Node(a), &covers, 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn disjointness_from_history() {
        let f = IndexFamily::rect(2);
        let inc = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[2.0, 1.0]), r(&[1.0, 2.0])]).unwrap();
        assert!(inc.disjoint_from(&f, &r(&[3.0, 0.5])).unwrap());
        assert!(inc.disjoint_from(&f, &r(&[0.5, 0.5])).unwrap());
        assert!(!inc.disjoint_from(&f, &r(&[1.5, 1.5])).unwrap());
    }
}
