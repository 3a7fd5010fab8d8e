mod common;

use cmarkov::sampler::{gaussian_fdd_moments, numbering_invariance_check, sample_grid, FddPlan};
use cmarkov::stats;
use cmarkov::{IndexFamily, IndexSet, InitialLaw, KernelSpec, Tree};
use common::*;
use proptest::prelude::*;

fn random_sets(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.1f64..2.0, n), 1..6)
}

fn ou_cov(lambda: f64, sigma: f64, mu: f64, mv: f64, muv: f64) -> f64 {
    let sym = mu + mv - 2.0 * muv;
    sigma * sigma / (2.0 * lambda) * ((-lambda * sym).exp() - (-lambda * (mu + mv)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn brownian_sheet_covariance(n in 1usize..=3, sets in random_sets(3), v0 in 0.0f64..2.0) {
        let f = rect_family(n);
        let sets: Vec<IndexSet<f64>> = sets.iter().map(|c| r(&c[..n])).collect();
        let nu = InitialLaw::Gaussian { mean: 0.5, var: v0 };
        let fdd = gaussian_fdd_moments(&KernelSpec::brownian(), &f, &nu, &sets).unwrap();
        for (i, a) in sets.iter().enumerate() {
            prop_assert!((fdd.mean[i] - 0.5).abs() < 1e-12);
            for (j, b) in sets.iter().enumerate() {
                let want: f64 = v0 + meet(&corner(a), &corner(b)).iter().product::<f64>();
                prop_assert!((fdd.cov.get(i, j) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ou_closed_form(
        n in 1usize..=2,
        sets in random_sets(2),
        lambda in 0.2f64..2.0,
        sigma in 0.3f64..2.0,
        x in -2.0f64..2.0,
    ) {
        let f = rect_family(n);
        let sets: Vec<IndexSet<f64>> = sets.iter().map(|c| r(&c[..n])).collect();
        let spec = KernelSpec::gaussian_ou(lambda, sigma);
        let fdd = gaussian_fdd_moments(&spec, &f, &InitialLaw::PointMass(x), &sets).unwrap();
        let m = |c: &[f64]| c.iter().product::<f64>();
        for (i, a) in sets.iter().enumerate() {
            let ca = corner(a);
            prop_assert!((fdd.mean[i] - x * (-lambda * m(&ca)).exp()).abs() < 1e-10);
            for (j, b) in sets.iter().enumerate() {
                let cb = corner(b);
                let want = ou_cov(lambda, sigma, m(&ca), m(&cb), m(&meet(&ca, &cb)));
                prop_assert!((fdd.cov.get(i, j) - want).abs() < 1e-10, "{} vs {}", fdd.cov.get(i, j), want);
            }
        }
    }

    #[test]
    fn moments_are_consistent_under_marginals_and_permutations(
        n in 1usize..=3,
        sets in random_sets(3),
        keep_mask in 1u32..64,
        rot in 0usize..6,
    ) {
        let f = rect_family(n);
        let sets: Vec<IndexSet<f64>> = sets.iter().map(|c| r(&c[..n])).collect();
        let nu = InitialLaw::Gaussian { mean: 0.2, var: 0.7 };
        for spec in [KernelSpec::brownian(), KernelSpec::gaussian_ou(0.6, 1.3)] {
            let full = gaussian_fdd_moments(&spec, &f, &nu, &sets).unwrap();
            let keep: Vec<usize> = (0..sets.len()).filter(|i| keep_mask & (1 << i) != 0).collect();
            prop_assume!(!keep.is_empty());
            let sub_sets: Vec<_> = keep.iter().map(|&i| sets[i].clone()).collect();
            let sub = gaussian_fdd_moments(&spec, &f, &nu, &sub_sets).unwrap();
            prop_assert!(full.marginal(&keep).max_abs_diff(&sub) < 1e-12);

            let k = rot % sets.len();
            let perm: Vec<usize> = (0..sets.len()).map(|i| (i + k) % sets.len()).collect();
            let permuted: Vec<_> = perm.iter().map(|&i| sets[i].clone()).collect();
            let p = gaussian_fdd_moments(&spec, &f, &nu, &permuted).unwrap();
            prop_assert!(full.marginal(&perm).max_abs_diff(&p) < 1e-12);

            let rep = numbering_invariance_check(&spec, &f, &nu, &sets, 0, 0).unwrap();
            prop_assert!(rep.passed, "{rep:?}");
        }
    }
}

#[test]
fn sampling_is_reproducible_per_seed() {
    let f = rect_family(2);
    let sets = vec![r(&[1.0, 0.5]), r(&[0.5, 1.0]), r(&[1.0, 1.0])];
    let nu = InitialLaw::Gaussian { mean: 0.0, var: 1.0 };
    let spec = KernelSpec::gaussian_ou(0.5, 1.0);
    let a = cmarkov::sampler::sample_fdd(&spec, &f, &nu, &sets, 42).unwrap();
    let b = cmarkov::sampler::sample_fdd(&spec, &f, &nu, &sets, 42).unwrap();
    let c = cmarkov::sampler::sample_fdd(&spec, &f, &nu, &sets, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.values, c.values);
    let plan = FddPlan::new(&spec, &f, &sets).unwrap();
    assert_eq!(plan.sample_many(&nu, 50, 9).unwrap(), plan.sample_many(&nu, 50, 9).unwrap());
}

#[test]
fn empirical_covariance_matches_moments() {
    let f = rect_family(2);
    let axes = vec![vec![0.5, 1.0], vec![0.5, 1.5]];
    let spec = KernelSpec::gaussian_ou(0.8, 1.2);
    let nu = InitialLaw::Gaussian { mean: 1.0, var: 0.5 };
    let n = 20_000;
    let grid = sample_grid(&spec, &f, &nu, &axes, n, 3).unwrap();
    let fdd = gaussian_fdd_moments(&spec, &f, &nu, &grid.corners).unwrap();
    for i in 0..grid.corners.len() {
        let xi: Vec<f64> = grid.values.iter().map(|v| v[i]).collect();
        let (m, se) = stats::mean_se(&xi);
        assert!((m - fdd.mean[i]).abs() < 4.0 * se);
        for j in 0..=i {
            let xj: Vec<f64> = grid.values.iter().map(|v| v[j]).collect();
            let prod: Vec<f64> = xi.iter().zip(&xj).map(|(a, b)| (a - fdd.mean[i]) * (b - fdd.mean[j])).collect();
            let (c, se) = stats::mean_se(&prod);
            assert!((c - fdd.cov.get(i, j)).abs() < 4.0 * se, "{i} {j}: {c} vs {}", fdd.cov.get(i, j));
        }
    }
}

#[test]
fn grid_corners_are_lexicographic() {
    let f = rect_family(2);
    let axes = vec![vec![1.0, 2.0], vec![0.5, 1.0, 1.5]];
    let g = sample_grid(&KernelSpec::brownian(), &f, &InitialLaw::default(), &axes, 2, 0).unwrap();
    assert_eq!(g.corners[0], r(&[1.0, 0.5]));
    assert_eq!(g.corners[1], r(&[1.0, 1.0]));
    assert_eq!(g.corners[3], r(&[2.0, 0.5]));
    assert_eq!(g.values.len(), 2);
    assert_eq!(g.values[0].len(), 6);
}

#[test]
fn tree_levy_covariance_counts_shared_edges() {
    let tree = Tree::binary(3);
    let f: IndexFamily<f64> = IndexFamily::tree(tree.clone());
    let nodes: Vec<IndexSet<f64>> = (0..tree.len()).map(IndexSet::Node).collect();
    let fdd = gaussian_fdd_moments(&KernelSpec::brownian(), &f, &InitialLaw::default(), &nodes).unwrap();
    for a in 0..tree.len() {
        for b in 0..tree.len() {
            let shared = tree.depth(tree.lca(a, b)) as f64;
            assert!((fdd.cov.get(a, b) - shared).abs() < 1e-12);
        }
    }
}

#[test]
fn single_precision_matches_double() {
    let f32fam: cmarkov::IndexFamily32 = IndexFamily::rect(2);
    let sets32 = vec![IndexSet::rect([1.0f32, 0.5]), IndexSet::rect([0.5f32, 1.0])];
    let spec32: cmarkov::KernelSpec32 = KernelSpec::gaussian_ou(0.5, 1.0);
    let m32 = gaussian_fdd_moments(&spec32, &f32fam, &InitialLaw::PointMass(1.0f32), &sets32).unwrap();
    let sets64 = vec![r(&[1.0, 0.5]), r(&[0.5, 1.0])];
    let m64 = gaussian_fdd_moments(&KernelSpec::gaussian_ou(0.5, 1.0), &rect_family(2), &InitialLaw::PointMass(1.0), &sets64)
        .unwrap();
    for i in 0..2 {
        assert!((m32.mean[i] as f64 - m64.mean[i]).abs() < 1e-5);
        for j in 0..2 {
            assert!((m32.cov.get(i, j) as f64 - m64.cov.get(i, j)).abs() < 1e-5);
        }
    }
}
