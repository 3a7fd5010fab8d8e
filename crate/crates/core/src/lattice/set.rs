use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A member of an indexing collection.
///
/// `Rect(t)` is the rectangle `[0, t]`, `Node(v)` the branch from the root to
/// `v`, and `Prod` a cartesian product with one component per factor family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IndexSet<T> {
    Rect(Vec<T>),
    Node(usize),
    Prod(Vec<IndexSet<T>>),
}

impl<T: Scalar> Eq for IndexSet<T> {}

impl<T: Scalar> PartialOrd for IndexSet<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order used for tie-breaks. Rectangle corners compare
/// colexicographically (last axis first); any linear extension of the
/// componentwise order is a valid consistent numbering, and this one is it.
impl<T: Scalar> Ord for IndexSet<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        use IndexSet::*;
        match (self, other) {
            (Rect(a), Rect(b)) => a
                .iter()
                .rev()
                .zip(b.iter().rev())
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or_else(|| a.len().cmp(&b.len())),
            (Node(a), Node(b)) => a.cmp(b),
            (Prod(a), Prod(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl<T> IndexSet<T> {
    fn rank(&self) -> u8 {
        match self {
            IndexSet::Rect(_) => 0,
            IndexSet::Node(_) => 1,
            IndexSet::Prod(_) => 2,
        }
    }

    pub fn corner(&self) -> Option<&[T]> {
        match self {
            IndexSet::Rect(c) => Some(c),
            _ => None,
        }
    }
}

impl<T: Scalar> IndexSet<T> {
    pub fn rect<I: IntoIterator<Item = T>>(corner: I) -> Self {
        IndexSet::Rect(corner.into_iter().collect())
    }

    pub fn rect_f64(corner: &[f64]) -> Self {
        IndexSet::Rect(corner.iter().map(|&x| T::lit(x)).collect())
    }

    /// Label used in CSV headers, e.g. `A(2.0,1.0)`.
    pub fn label(&self) -> String {
        match self {
            IndexSet::Rect(c) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{:?}", x.as_f64())).collect();
                format!("A({})", parts.join(","))
            }
            IndexSet::Node(v) => format!("N({v})"),
            IndexSet::Prod(cs) => {
                let parts: Vec<String> = cs.iter().map(|c| c.label()).collect();
                format!("P({})", parts.join("x"))
            }
        }
    }
}

impl<T: Scalar> fmt::Display for IndexSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Rooted tree whose branches form a discrete indexing collection.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl Tree {
    /// Builds a tree on nodes `0..n` from `(parent, child)` edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("tree needs at least one node".into()));
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            if p >= n || c >= n || p == c {
                return Err(Error::InvalidParameter(format!("bad tree edge ({p},{c})")));
            }
            if parent[c].is_some() {
                return Err(Error::InvalidParameter(format!("node {c} has two parents")));
            }
            parent[c] = Some(p);
            children[p].push(c);
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "tree must have exactly one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut stack = vec![root];
        let mut seen = 1;
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                seen += 1;
                stack.push(c);
            }
        }
        if seen != n {
            return Err(Error::InvalidParameter("tree edges contain a cycle".into()));
        }
        Ok(Tree { parent, depth, children, root })
    }

    /// Complete binary tree of the given depth in heap order (root 0).
    pub fn binary(depth: usize) -> Self {
        let n = (1usize << (depth + 1)) - 1;
        let edges: Vec<(usize, usize)> = (1..n).map(|c| ((c - 1) / 2, c)).collect();
        Tree::from_edges(n, &edges).expect("heap-ordered binary tree is valid")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.parent.len()
    }

    /// Whether `a` lies on the root-to-`b` path (ancestor or equal).
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut v = b;
        while self.depth[v] > self.depth[a] {
            v = self.parent[v].expect("non-root node has a parent");
        }
        v == a
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut u, mut v) = (a, b);
        while self.depth[u] > self.depth[v] {
            u = self.parent[u].unwrap();
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v].unwrap();
        }
        while u != v {
            u = self.parent[u].unwrap();
            v = self.parent[v].unwrap();
        }
        u
    }

    pub fn path_distance(&self, a: usize, b: usize) -> usize {
        let l = self.lca(a, b);
        self.depth[a] + self.depth[b] - 2 * self.depth[l]
    }
}

/// Structure of an indexing collection.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind<T> {
    Rect { dim: usize },
    Tree(Tree),
    Product(Vec<IndexFamily<T>>),
}

/// The measure `m` carried by a family.
///
/// * `Lebesgue`: volume of `[0,t]` on rectangles; product of factor measures on products.
/// * `Weighted(a)`: rectangles only, `m([0,t]) = prod a_i t_i`.
/// * `Additive(a)`: `m(A) = sum a_i m_i(A_i)`, on rectangles with `m_i(A_i) = t_i`.
/// * `NodeCount`: trees, `m(branch(v)) = root_mass + depth(v)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure<T> {
    Lebesgue,
    Weighted(Vec<T>),
    Additive(Vec<T>),
    NodeCount { root_mass: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexFamily<T> {
    kind: FamilyKind<T>,
    measure: Measure<T>,
}

impl<T: Scalar> IndexFamily<T> {
    pub fn rect(dim: usize) -> Self {
        assert!(dim > 0, "rectangle family needs dimension >= 1");
        IndexFamily { kind: FamilyKind::Rect { dim }, measure: Measure::Lebesgue }
    }

    pub fn rect_weighted(weights: Vec<T>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(IndexFamily { kind: FamilyKind::Rect { dim: weights.len() }, measure: Measure::Weighted(weights) })
    }

    pub fn rect_additive(weights: Vec<T>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(IndexFamily { kind: FamilyKind::Rect { dim: weights.len() }, measure: Measure::Additive(weights) })
    }

    pub fn tree(tree: Tree) -> Self {
        IndexFamily { kind: FamilyKind::Tree(tree), measure: Measure::NodeCount { root_mass: T::zero() } }
    }

    pub fn tree_with_root_mass(tree: Tree, root_mass: T) -> Result<Self> {
        if !(root_mass >= T::zero()) || !root_mass.is_finite() {
            return Err(Error::InvalidParameter("root mass must be finite and >= 0".into()));
        }
        Ok(IndexFamily { kind: FamilyKind::Tree(tree), measure: Measure::NodeCount { root_mass } })
    }

    /// Product family whose measure is the product of the factor measures.
    pub fn product(factors: Vec<IndexFamily<T>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("product needs at least one factor".into()));
        }
        Ok(IndexFamily { kind: FamilyKind::Product(factors), measure: Measure::Lebesgue })
    }

    /// Product family with the additive measure `sum a_i m_i(A_i)`.
    pub fn product_additive(factors: Vec<IndexFamily<T>>, weights: Vec<T>) -> Result<Self> {
        check_weights(&weights)?;
        if factors.len() != weights.len() {
            return Err(Error::ArityMismatch { expected: factors.len(), got: weights.len() });
        }
        Ok(IndexFamily { kind: FamilyKind::Product(factors), measure: Measure::Additive(weights) })
    }

    pub fn kind(&self) -> &FamilyKind<T> {
        &self.kind
    }

    pub fn measure_spec(&self) -> &Measure<T> {
        &self.measure
    }

    pub fn is_rect(&self) -> bool {
        matches!(self.kind, FamilyKind::Rect { .. })
    }

    pub fn dim(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::Rect { dim } => Some(dim),
            _ => None,
        }
    }

    pub fn factors(&self) -> Option<&[IndexFamily<T>]> {
        match &self.kind {
            FamilyKind::Product(f) => Some(f),
            _ => None,
        }
    }

    pub fn tree_ref(&self) -> Option<&Tree> {
        match &self.kind {
            FamilyKind::Tree(t) => Some(t),
            _ => None,
        }
    }

    /// The minimal set `∅'`.
    pub fn empty_set(&self) -> IndexSet<T> {
        match &self.kind {
            FamilyKind::Rect { dim } => IndexSet::Rect(vec![T::zero(); *dim]),
            FamilyKind::Tree(t) => IndexSet::Node(t.root()),
            FamilyKind::Product(fs) => IndexSet::Prod(fs.iter().map(|f| f.empty_set()).collect()),
        }
    }

    /// Validates membership of `a` in this family.
    pub fn check(&self, a: &IndexSet<T>) -> Result<()> {
        match (&self.kind, a) {
            (FamilyKind::Rect { dim }, IndexSet::Rect(c)) => {
                if c.len() != *dim {
                    return Err(Error::NotInFamily(format!("{a}: expected {dim} coordinates")));
                }
                if c.iter().any(|x| !x.is_finite() || *x < T::zero()) {
                    return Err(Error::NotInFamily(format!("{a}: corners must be finite and >= 0")));
                }
                Ok(())
            }
            (FamilyKind::Tree(t), IndexSet::Node(v)) => {
                if t.contains(*v) {
                    Ok(())
                } else {
                    Err(Error::NotInFamily(format!("{a}: unknown tree node")))
                }
            }
            (FamilyKind::Product(fs), IndexSet::Prod(cs)) => {
                if fs.len() != cs.len() {
                    return Err(Error::NotInFamily(format!("{a}: product arity {} != {}", cs.len(), fs.len())));
                }
                fs.iter().zip(cs).try_for_each(|(f, c)| f.check(c))
            }
            _ => Err(Error::KindMismatch(format!("{a} does not match family kind"))),
        }
    }

    pub fn intersect(&self, a: &IndexSet<T>, b: &IndexSet<T>) -> Result<IndexSet<T>> {
        match (&self.kind, a, b) {
            (FamilyKind::Rect { .. }, IndexSet::Rect(x), IndexSet::Rect(y)) if x.len() == y.len() => {
                Ok(IndexSet::Rect(x.iter().zip(y).map(|(p, q)| p.min(*q)).collect()))
            }
            (FamilyKind::Tree(t), IndexSet::Node(u), IndexSet::Node(v)) => Ok(IndexSet::Node(t.lca(*u, *v))),
            (FamilyKind::Product(fs), IndexSet::Prod(x), IndexSet::Prod(y))
                if x.len() == fs.len() && y.len() == fs.len() =>
            {
                let comps = fs
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(f, (p, q))| f.intersect(p, q))
                    .collect::<Result<Vec<_>>>()?;
                Ok(IndexSet::Prod(comps))
            }
            _ => Err(Error::KindMismatch(format!("cannot intersect {a} and {b}"))),
        }
    }

    /// Whether `a ⊆ b` as sets.
    pub fn subset(&self, a: &IndexSet<T>, b: &IndexSet<T>) -> bool {
        match (&self.kind, a, b) {
            (FamilyKind::Rect { .. }, IndexSet::Rect(x), IndexSet::Rect(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p <= q)
            }
            (FamilyKind::Tree(t), IndexSet::Node(u), IndexSet::Node(v)) => t.is_ancestor(*u, *v),
            (FamilyKind::Product(fs), IndexSet::Prod(x), IndexSet::Prod(y)) => {
                x.len() == fs.len()
                    && y.len() == fs.len()
                    && fs.iter().zip(x.iter().zip(y)).all(|(f, (p, q))| f.subset(p, q))
            }
            _ => false,
        }
    }

    /// Interior relation: `u ⊆ p°`.
    ///
    /// Rectangles: strict componentwise dominance. Trees: `u` is a proper
    /// ancestor of `p`. Products: every factor is strictly inside.
    pub fn strictly_inside(&self, u: &IndexSet<T>, p: &IndexSet<T>) -> bool {
        match (&self.kind, u, p) {
            (FamilyKind::Rect { .. }, IndexSet::Rect(x), IndexSet::Rect(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a < b)
            }
            (FamilyKind::Tree(t), IndexSet::Node(a), IndexSet::Node(b)) => a != b && t.is_ancestor(*a, *b),
            (FamilyKind::Product(fs), IndexSet::Prod(x), IndexSet::Prod(y)) => {
                fs.iter().zip(x.iter().zip(y)).all(|(f, (a, b))| f.strictly_inside(a, b))
            }
            _ => false,
        }
    }

    /// The measure `m(a)` of a single index set.
    pub fn set_measure(&self, a: &IndexSet<T>) -> T {
        match (&self.kind, &self.measure, a) {
            (FamilyKind::Rect { .. }, Measure::Lebesgue, IndexSet::Rect(c)) => c.iter().fold(T::one(), |p, &x| p * x),
            (FamilyKind::Rect { .. }, Measure::Weighted(w), IndexSet::Rect(c)) => {
                c.iter().zip(w).fold(T::one(), |p, (&x, &a)| p * a * x)
            }
            (FamilyKind::Rect { .. }, Measure::Additive(w), IndexSet::Rect(c)) => {
                c.iter().zip(w).fold(T::zero(), |s, (&x, &a)| s + a * x)
            }
            (FamilyKind::Tree(t), Measure::NodeCount { root_mass }, IndexSet::Node(v)) => {
                *root_mass + T::from_usize(t.depth(*v)).unwrap()
            }
            (FamilyKind::Product(fs), Measure::Additive(w), IndexSet::Prod(cs)) => fs
                .iter()
                .zip(cs)
                .zip(w)
                .fold(T::zero(), |s, ((f, c), &a)| s + a * f.set_measure(c)),
            (FamilyKind::Product(fs), _, IndexSet::Prod(cs)) => {
                fs.iter().zip(cs).fold(T::one(), |p, (f, c)| p * f.set_measure(c))
            }
            _ => T::nan(),
        }
    }

    /// Hausdorff distance between two index sets.
    ///
    /// Rectangles use the sup-norm of the corner difference; trees the path
    /// distance between branch endpoints; products the max over factors.
    pub fn hausdorff(&self, a: &IndexSet<T>, b: &IndexSet<T>) -> T {
        match (&self.kind, a, b) {
            (FamilyKind::Rect { .. }, IndexSet::Rect(x), IndexSet::Rect(y)) => x
                .iter()
                .zip(y)
                .fold(T::zero(), |m, (p, q)| m.max((*p - *q).abs())),
            (FamilyKind::Tree(t), IndexSet::Node(u), IndexSet::Node(v)) => {
                T::from_usize(t.path_distance(*u, *v)).unwrap()
            }
            (FamilyKind::Product(fs), IndexSet::Prod(x), IndexSet::Prod(y)) => fs
                .iter()
                .zip(x.iter().zip(y))
                .fold(T::zero(), |m, (f, (p, q))| m.max(f.hausdorff(p, q))),
            _ => T::nan(),
        }
    }

    /// Shift operator `θ_u(a)`: corner addition on rectangles.
    pub fn shift(&self, a: &IndexSet<T>, u: &IndexSet<T>) -> Result<IndexSet<T>> {
        match (&self.kind, a, u) {
            (FamilyKind::Rect { .. }, IndexSet::Rect(x), IndexSet::Rect(y)) if x.len() == y.len() => {
                Ok(IndexSet::Rect(x.iter().zip(y).map(|(p, q)| *p + *q).collect()))
            }
            (FamilyKind::Product(fs), IndexSet::Prod(x), IndexSet::Prod(y)) => Ok(IndexSet::Prod(
                fs.iter()
                    .zip(x.iter().zip(y))
                    .map(|(f, (p, q))| f.shift(p, q))
                    .collect::<Result<Vec<_>>>()?,
            )),
            (FamilyKind::Tree(_), _, _) => Err(Error::Unsupported("shift operators on tree families".into())),
            _ => Err(Error::KindMismatch(format!("cannot shift {a} by {u}"))),
        }
    }

    /// Bounding set `B_n`; `[0, n·1]` on rectangles.
    pub fn bounding_set(&self, n: usize) -> Result<IndexSet<T>> {
        let level = T::from_usize(n).unwrap();
        match &self.kind {
            FamilyKind::Rect { dim } => Ok(IndexSet::Rect(vec![level; *dim])),
            FamilyKind::Product(fs) => Ok(IndexSet::Prod(
                fs.iter().map(|f| f.bounding_set(n)).collect::<Result<Vec<_>>>()?,
            )),
            FamilyKind::Tree(_) => Err(Error::Unsupported("bounding sets on tree families".into())),
        }
    }

    /// Dyadic approximant `g_n(a)`: each corner coordinate `t` maps to
    /// `(⌊t·2ⁿ⌋ + 1)/2ⁿ`, so `a` sits strictly inside the result.
    pub fn dyadic_approx(&self, a: &IndexSet<T>, level: u32) -> Result<IndexSet<T>> {
        let dim = self
            .dim()
            .ok_or_else(|| Error::Unsupported("dyadic approximation needs a rectangle family".into()))?;
        self.check(a)?;
        let corner = a.corner().unwrap();
        let bound = T::from_u32(level).unwrap();
        if corner.iter().any(|&t| t > bound) {
            return Err(Error::OutOfBounds(a.label()));
        }
        let scale = T::from_f64(2f64.powi(level as i32)).unwrap();
        let out: Vec<T> = corner
            .iter()
            .map(|&t| ((t * scale).floor() + T::one()) / scale)
            .collect();
        debug_assert_eq!(out.len(), dim);
        Ok(IndexSet::Rect(out))
    }
}

fn check_weights<T: Scalar>(w: &[T]) -> Result<()> {
    if w.is_empty() || w.iter().any(|a| !(*a > T::zero()) || !a.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and > 0".into()));
    }
    Ok(())
}
