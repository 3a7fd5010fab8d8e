mod common;

use std::collections::BTreeMap;

use cmarkov::lattice::{measure, split, union_measure};
use cmarkov::{Frontier, Increment, IndexFamily, IndexSet, Semilattice, TieBreak, Tree};
use common::*;
use proptest::prelude::*;

fn frontier_of(n: usize, parts: &[Vec<f64>], outer: &[f64]) -> (IndexFamily<f64>, Increment<f64>, Frontier<f64>) {
    let f = rect_family(n);
    let inc = Increment::new(&f, r(outer), parts.iter().map(|p| r(p)).collect()).unwrap();
    let fr = Frontier::new(&f, &inc).unwrap();
    (f, inc, fr)
}

/// Extremal parts, as the increment keeps them.
fn maximal(parts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let dominated = parts.iter().enumerate().any(|(j, q)| {
            j != i && p.iter().zip(q).all(|(a, b)| a <= b) && (p != q || j < i)
        });
        if !dominated {
            out.push(p.clone());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frontier_is_the_nonzero_coefficient_set((n, parts, outer) in rect_increment(3, 4)) {
        let (_, inc, fr) = frontier_of(n, &parts, &outer);
        prop_assume!(!inc.is_empty());
        let oracle = subset_oracle(&maximal(&parts));
        let got: BTreeMap<Vec<u64>, i64> = fr
            .sets()
            .iter()
            .zip(fr.weights())
            .map(|(s, &w)| (key(&corner(s)), w))
            .collect();
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn weights_recover_the_union_volume((n, parts, outer) in rect_increment(3, 4)) {
        let (_, inc, fr) = frontier_of(n, &parts, &outer);
        prop_assume!(!inc.is_empty());
        let vols: Vec<f64> = fr.sets().iter().map(|s| corner(s).iter().product()).collect();
        let got = fr.delta(&vols).unwrap();
        let want = union_volume(&parts);
        prop_assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn union_measure_matches_compression((n, parts, _outer) in rect_increment(3, 5)) {
        let f = rect_family(n);
        let sets: Vec<_> = parts.iter().map(|p| r(p)).collect();
        let got = union_measure(&f, &sets).unwrap();
        let want = union_volume(&parts);
        prop_assert!((got - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn psi_telescopes(
        (n, parts, outer) in rect_increment(3, 4),
        values in prop::collection::vec(-5.0f64..5.0, 32),
        x_a in -5.0f64..5.0,
    ) {
        let (_, _, fr) = frontier_of(n, &parts, &outer);
        let vx = &values[..fr.len()];
        let psi = fr.psi();
        prop_assert_eq!(psi.len(), fr.len() + 1);
        prop_assert_eq!(psi[0], 1);
        prop_assert_eq!(psi[1], 1);
        // ψ is idempotent on its image
        for &j in &psi[1..] {
            prop_assert_eq!(psi[j], j);
        }
        let mut rhs = x_a - vx[psi[0] - 1];
        for i in 0..fr.len() {
            rhs -= fr.weights()[i] as f64 * (vx[i] - vx[psi[i + 1] - 1]);
        }
        let lhs = x_a - fr.delta(vx).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn split_partitions_the_measure(
        (n, parts, outer) in rect_increment(3, 4),
        cut in prop::collection::vec(0.0f64..2.5, 3),
    ) {
        let f = rect_family(n);
        let inc = Increment::new(&f, r(&outer), parts.iter().map(|p| r(p)).collect()).unwrap();
        let a_prime = r(&cut[..n]);
        let (c1, c2) = split(&f, &inc, &a_prime).unwrap();
        let total = measure(&f, &inc).unwrap();
        let pieces = measure(&f, &c1).unwrap() + measure(&f, &c2).unwrap();
        prop_assert!((total - pieces).abs() < 1e-10 * total.max(1.0));
        // C' lives inside A ∩ A'
        prop_assert!(f.subset(c1.outer(), &a_prime));
        prop_assert_eq!(c2.outer(), inc.outer());
    }

    #[test]
    fn closure_is_closed_and_consistently_numbered(
        n in 1usize..=3,
        corners in prop::collection::vec(prop::collection::vec(prop::sample::select(vec![0.5, 1.0, 1.5, 2.0]), 3), 1..6),
    ) {
        let f = rect_family(n);
        let sets: Vec<_> = corners.iter().map(|c| r(&c[..n])).collect();
        for tie in [TieBreak::Canonical, TieBreak::Reversed] {
            let sl = Semilattice::closure_with(&f, &sets, 4096, tie).unwrap();
            sl.check_invariants(&f).unwrap();
            for s in &sets {
                prop_assert!(sl.position(s).is_some());
            }
            for (i, a) in sl.sets().iter().enumerate() {
                for b in &sl.sets()[i + 1..] {
                    prop_assert!(!f.subset(b, a) || a == b);
                }
            }
            for i in 1..sl.len() {
                let inc = sl.left_neighborhood(&f, i).unwrap();
                prop_assert_eq!(inc.outer(), sl.get(i));
                for p in inc.parts() {
                    prop_assert!(sl.sets()[..i].contains(p) || inc.is_empty());
                }
            }
        }
    }

    #[test]
    fn dyadic_approximants_form_a_decreasing_chain(
        c in prop::collection::vec(0.0f64..3.0, 2),
        level in 3u32..10,
    ) {
        let f = rect_family(2);
        let a = r(&c);
        let g = f.dyadic_approx(&a, level).unwrap();
        let g_next = f.dyadic_approx(&a, level + 1).unwrap();
        prop_assert!(f.strictly_inside(&a, &g));
        prop_assert!(f.subset(&a, &g_next));
        prop_assert!(f.subset(&g_next, &g));
        prop_assert!(f.hausdorff(&a, &g) <= 2f64.powi(-(level as i32)) + 1e-15);
    }
}

#[test]
fn two_part_staircase() {
    let (f, _, fr) = frontier_of(2, &[vec![2.0, 1.0], vec![1.0, 2.0]], &[2.0, 2.0]);
    assert_eq!(fr.sets(), &[r(&[2.0, 1.0]), r(&[1.0, 2.0]), r(&[1.0, 1.0])]);
    assert_eq!(fr.weights(), &[1, 1, -1]);
    assert_eq!(fr.psi(), &[1, 1, 3, 3]);
    assert_eq!(fr.increment_norm(&f), 1.0);
}

#[test]
fn tree_frontier_is_the_parent_branch() {
    let f: IndexFamily<f64> = IndexFamily::tree(Tree::binary(3));
    // node 4 has parent 1; the increment {4} \ {1} has frontier {branch to 1}
    let inc = Increment::new(&f, IndexSet::Node(4), vec![IndexSet::Node(1)]).unwrap();
    let fr = Frontier::new(&f, &inc).unwrap();
    assert_eq!(fr.sets(), &[IndexSet::Node(1)]);
    assert_eq!(fr.weights(), &[1]);
}

#[test]
fn empty_increment_has_outer_as_frontier() {
    let f = rect_family(2);
    let inc = Increment::new(&f, r(&[1.0, 1.0]), vec![r(&[1.0, 1.0])]).unwrap();
    assert!(inc.is_empty());
    let fr = Frontier::new(&f, &inc).unwrap();
    assert_eq!(fr.sets(), &[r(&[1.0, 1.0])]);
    assert_eq!(measure(&f, &inc).unwrap(), 0.0);
}

#[test]
fn increment_rejects_an_empty_union() {
    let f = rect_family(2);
    assert!(Increment::new(&f, r(&[1.0, 1.0]), vec![]).is_err());
    assert!(Increment::new(&f, r(&[1.0, -1.0]), vec![r(&[0.0, 0.0])]).is_err());
}
