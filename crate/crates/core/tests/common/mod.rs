#![allow(dead_code)]

use std::collections::BTreeMap;

use cmarkov::{IndexFamily, IndexSet};
use proptest::prelude::*;

pub fn r(c: &[f64]) -> IndexSet<f64> {
    IndexSet::rect_f64(c)
}

pub fn corner(set: &IndexSet<f64>) -> Vec<f64> {
    set.corner().expect("rectangle").to_vec()
}

/// Key for exact comparison of corners.
pub fn key(c: &[f64]) -> Vec<u64> {
    c.iter().map(|x| x.to_bits()).collect()
}

pub fn meet(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).collect()
}

/// Inclusion–exclusion coefficients by brute force over bitmasks, keyed by
/// the intersection corner; zero entries removed.
pub fn subset_oracle(parts: &[Vec<f64>]) -> BTreeMap<Vec<u64>, i64> {
    let k = parts.len();
    let mut out: BTreeMap<Vec<u64>, i64> = BTreeMap::new();
    for mask in 1u32..(1 << k) {
        let mut cur: Option<Vec<f64>> = None;
        for (i, p) in parts.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cur = Some(match cur {
                    None => p.clone(),
                    Some(c) => meet(&c, p),
                });
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        *out.entry(key(&cur.unwrap())).or_insert(0) += sign;
    }
    out.retain(|_, v| *v != 0);
    out
}

/// Lebesgue measure of a union of origin-anchored boxes by coordinate compression.
pub fn union_volume(parts: &[Vec<f64>]) -> f64 {
    if parts.is_empty() {
        return 0.0;
    }
    let n = parts[0].len();
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut v: Vec<f64> = parts.iter().map(|p| p[j]).collect();
            v.push(0.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![1usize; n];
    loop {
        let upper: Vec<f64> = (0..n).map(|j| axes[j][idx[j]]).collect();
        if parts.iter().any(|p| p.iter().zip(&upper).all(|(a, u)| u <= a)) {
            total += (0..n).map(|j| axes[j][idx[j]] - axes[j][idx[j] - 1]).product::<f64>();
        }
        let mut j = 0;
        loop {
            if j == n {
                return total;
            }
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 1;
            j += 1;
        }
    }
}

/// Dimension, up to `max_parts` random parts and an outer corner containing them all.
pub fn rect_increment(max_dim: usize, max_parts: usize) -> impl Strategy<Value = (usize, Vec<Vec<f64>>, Vec<f64>)> {
    (1..=max_dim, 1..=max_parts).prop_flat_map(|(n, k)| {
        (
            Just(n),
            prop::collection::vec(prop::collection::vec(0.05f64..2.0, n), k),
            prop::collection::vec(0.0f64..0.5, n),
        )
            .prop_map(|(n, parts, slack)| {
                let outer: Vec<f64> = (0..n)
                    .map(|j| parts.iter().map(|p| p[j]).fold(0.0, f64::max) + slack[j])
                    .collect();
                (n, parts, outer)
            })
    })
}

pub fn rect_family(n: usize) -> IndexFamily<f64> {
    IndexFamily::rect(n)
}

/// Fixed dimension variant of [`rect_increment`].
pub fn rect_increment_in(n: usize, max_parts: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    rect_increment(n, max_parts)
        .prop_filter("dimension", move |(d, _, _)| *d == n)
        .prop_map(|(_, parts, outer)| (parts, outer))
}
