use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dist::CondDist;
use super::prepared::PreparedKernel;
use super::spec::KernelSpec;
use crate::error::{Error, Result};
use crate::lattice::{split, Increment, IndexFamily, IndexSet, Semilattice};
use crate::sampler::{replicate_rng, FddPlan, InitialLaw};
use crate::scalar::Scalar;
use crate::stats;

/// Test functions used by [`ck_residual`]: moments and two Fourier modes.
pub const CK_TEST_FUNCTIONS: [&str; 6] = ["x", "x^2", "cos(x)", "sin(x)", "cos(2x)", "sin(2x)"];

fn test_fn(k: usize, x: f64) -> f64 {
    match k {
        0 => x,
        1 => x * x,
        2 => x.cos(),
        3 => x.sin(),
        4 => (2.0 * x).cos(),
        _ => (2.0 * x).sin(),
    }
}

/// One-step versus two-step estimates of `E f(X_A)` for each test function.
#[derive(Clone, Debug, PartialEq)]
pub struct CkReport {
    pub one_step: Vec<f64>,
    pub two_step: Vec<f64>,
    /// Pooled standard error of the difference.
    pub std_err: Vec<f64>,
    /// `|mean diff| + |var diff|` of the composed Gaussian laws, when Gaussian.
    pub exact_discrepancy: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

impl CkReport {
    /// Whether every difference lies within `k` standard errors.
    pub fn within(&self, k: f64) -> bool {
        self.one_step
            .iter()
            .zip(&self.two_step)
            .zip(&self.std_err)
            .all(|((a, b), se)| (a - b).abs() <= k * se + 1e-12)
    }

    /// Largest `|diff| / se` over the test functions.
    pub fn max_z(&self) -> f64 {
        self.one_step
            .iter()
            .zip(&self.two_step)
            .zip(&self.std_err)
            .map(|((a, b), se)| if *se > 0.0 { (a - b).abs() / se } else if a == b { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }
}

/// Frontier values for the history `B`, drawn once from the process itself
/// so that product kernels see consistent factor values.
fn history_values<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    a_prime: &IndexSet<T>,
    seed: u64,
) -> Result<BTreeMap<IndexSet<T>, Vec<T>>> {
    let mut gens = inc.parts().to_vec();
    gens.push(a_prime.clone());
    let sl = Semilattice::closure(family, &gens)?;
    // history sets: everything in the closure except A' itself when A' ⊄ B
    let plan = FddPlan::from_semilattice(spec, family, sl)?;
    let nu = InitialLaw::Gaussian { mean: T::zero(), var: T::one() };
    let flat = plan.sample_with(&nu, &mut replicate_rng(seed, u64::MAX))?;
    let d = plan.state_dim();
    Ok(plan
        .semilattice()
        .sets()
        .iter()
        .enumerate()
        .map(|(p, s)| (s.clone(), flat[p * d..(p + 1) * d].to_vec()))
        .collect())
}

fn frontier_values<'a, T: Scalar>(
    k: &PreparedKernel<T>,
    values: &'a BTreeMap<IndexSet<T>, Vec<T>>,
) -> Result<Vec<&'a [T]>> {
    k.frontier()
        .sets()
        .iter()
        .map(|s| {
            values
                .get(s)
                .map(Vec::as_slice)
                .ok_or_else(|| Error::Inconsistent(format!("no history value for frontier set {s}")))
        })
        .collect()
}

/// Chapman–Kolmogorov residual: `E f(X_A)` under `P_C` against the
/// composition of `P_{C'}` and `P_{C''}` for the split along `A'`.
pub fn ck_residual<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    a_prime: &IndexSet<T>,
    n: usize,
    seed: u64,
) -> Result<CkReport> {
    spec.validate(family)?;
    let cut = family.intersect(a_prime, inc.outer())?;
    let (c1, c2) = split(family, inc, &cut)?;
    let mut values = history_values(spec, family, inc, &cut, seed)?;
    let whole = PreparedKernel::new(spec, family, inc)?;
    let first = PreparedKernel::new(spec, family, &c1)?;
    let second = PreparedKernel::new(spec, family, &c2)?;
    let d = spec.state_dim();
    if !inc.is_empty() && !c1.is_empty() {
        values.remove(&cut);
    }
    let one_law = whole.apply(&frontier_values(&whole, &values)?)?;
    let first_law = first.apply(&frontier_values(&first, &values)?)?;
    let cut_pos = second.frontier().sets().iter().position(|s| *s == cut);

    let exact_discrepancy = if spec.is_gaussian() {
        Some(gaussian_composition_gap(&whole, &first, &second, &values, &cut, d)?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = CK_TEST_FUNCTIONS.len();
    let mut one = vec![Vec::with_capacity(n); nf];
    let mut two = vec![Vec::with_capacity(n); nf];
    let mut buf = Vec::with_capacity(d);
    for _ in 0..n {
        buf.clear();
        one_law.sample_into(&mut rng, &mut buf);
        let x = buf[0].as_f64();
        for (k, acc) in one.iter_mut().enumerate() {
            acc.push(test_fn(k, x));
        }
    }
    for _ in 0..n {
        buf.clear();
        first_law.sample_into(&mut rng, &mut buf);
        let mid = buf.clone();
        let mut vx = frontier_values_with(&second, &values, cut_pos, &mid)?;
        buf.clear();
        let law = second.apply(&vx)?;
        law.sample_into(&mut rng, &mut buf);
        vx.clear();
        let x = buf[0].as_f64();
        for (k, acc) in two.iter_mut().enumerate() {
            acc.push(test_fn(k, x));
        }
    }
    let mut report = CkReport {
        one_step: Vec::with_capacity(nf),
        two_step: Vec::with_capacity(nf),
        std_err: Vec::with_capacity(nf),
        exact_discrepancy,
        n,
        seed,
    };
    for k in 0..nf {
        let (m1, s1) = stats::mean_se(&one[k]);
        let (m2, s2) = stats::mean_se(&two[k]);
        report.one_step.push(m1);
        report.two_step.push(m2);
        report.std_err.push((s1 * s1 + s2 * s2).sqrt());
    }
    Ok(report)
}

fn frontier_values_with<'a, T: Scalar>(
    k: &PreparedKernel<T>,
    values: &'a BTreeMap<IndexSet<T>, Vec<T>>,
    cut_pos: Option<usize>,
    mid: &'a [T],
) -> Result<Vec<&'a [T]>> {
    k.frontier()
        .sets()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if Some(i) == cut_pos && !values.contains_key(s) {
                Ok(mid)
            } else {
                values
                    .get(s)
                    .map(Vec::as_slice)
                    .ok_or_else(|| Error::Inconsistent(format!("no value for frontier set {s}")))
            }
        })
        .collect()
}

/// Exact gap between the one-step Gaussian law and the composed two-step law.
fn gaussian_composition_gap<T: Scalar>(
    whole: &PreparedKernel<T>,
    first: &PreparedKernel<T>,
    second: &PreparedKernel<T>,
    values: &BTreeMap<IndexSet<T>, Vec<T>>,
    cut: &IndexSet<T>,
    d: usize,
) -> Result<f64> {
    let eval = |k: &PreparedKernel<T>, override_cut: Option<&[T]>| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        // mean per component and d(mean)/d(x_cut[c']) per component
        let (rows, _) = k.gaussian_form()?;
        let sets = k.frontier().sets();
        let mut means = Vec::with_capacity(d);
        let mut grads = Vec::with_capacity(d);
        for row in &rows {
            let mut mu = row.constant.as_f64();
            let mut g = vec![0.0; d];
            for &(fi, comp, coef) in &row.terms {
                let s = &sets[fi];
                let x = match (override_cut, s == cut) {
                    (Some(mid), true) => {
                        g[comp] += coef.as_f64();
                        mid[comp]
                    }
                    _ => values.get(s).ok_or_else(|| Error::Inconsistent(format!("no value for {s}")))?[comp],
                };
                mu += coef.as_f64() * x.as_f64();
            }
            means.push(mu);
            grads.push(g);
        }
        Ok((means, grads))
    };
    let (_, v_whole) = whole.gaussian_form()?;
    let (_, v_first) = first.gaussian_form()?;
    let (_, v_second) = second.gaussian_form()?;
    let (m_whole, _) = eval(whole, None)?;
    let (m_first, _) = eval(first, None)?;
    let mid: Vec<T> = m_first.iter().map(|&x| T::lit(x)).collect();
    let cut_free = !values.contains_key(cut);
    let (m_two, grads) = eval(second, if cut_free { Some(&mid) } else { None })?;
    let mut gap: f64 = 0.0;
    for c in 0..d {
        let var_two = v_second[c].as_f64()
            + grads[c]
                .iter()
                .zip(&v_first)
                .map(|(g, v)| g * g * v.as_f64())
                .sum::<f64>();
        gap = gap.max((m_whole[c] - m_two[c]).abs() + (v_whole[c].as_f64() - var_two).abs());
    }
    Ok(gap)
}

/// Comparison of `P_C` and `P_{θ_u(C)}` on matched frontier values.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityGap {
    pub exact: bool,
    pub gap: f64,
    /// KS critical value for the statistical branch, 0 for the exact one.
    pub critical: f64,
}

impl HomogeneityGap {
    pub fn is_homogeneous(&self, tol: f64) -> bool {
        if self.exact {
            self.gap <= tol
        } else {
            self.gap <= self.critical
        }
    }
}

/// Exact coefficient and variance gap for Gaussian kernels; two-sample KS on
/// `n` draws per side otherwise.
pub fn homogeneity_gap<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    u: &IndexSet<T>,
    n: usize,
    seed: u64,
) -> Result<HomogeneityGap> {
    let shifted = inc.shifted(family, u)?;
    let k0 = PreparedKernel::new(spec, family, inc)?;
    let k1 = PreparedKernel::new(spec, family, &shifted)?;
    if k0.frontier().len() != k1.frontier().len() {
        return Err(Error::Inconsistent("shift changed the frontier size".into()));
    }
    for (a, b) in k0.frontier().sets().iter().zip(k1.frontier().sets()) {
        if family.shift(a, u)? != *b {
            return Err(Error::Inconsistent(format!("shift does not map frontier set {a} to {b}")));
        }
    }
    if spec.is_gaussian() {
        let (r0, v0) = k0.gaussian_form()?;
        let (r1, v1) = k1.gaussian_form()?;
        let mut gap: f64 = 0.0;
        for ((a, b), (va, vb)) in r0.iter().zip(&r1).zip(v0.iter().zip(&v1)) {
            gap = gap.max((a.constant - b.constant).abs().as_f64());
            for (ta, tb) in a.terms.iter().zip(&b.terms) {
                gap = gap.max((ta.2 - tb.2).abs().as_f64());
            }
            gap = gap.max((*va - *vb).abs().as_f64());
        }
        return Ok(HomogeneityGap { exact: true, gap, critical: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.state_dim();
    let vx: Vec<Vec<T>> = (0..k0.frontier().len())
        .map(|_| (0..d).map(|_| T::sample_standard_normal(&mut rng)).collect())
        .collect();
    let refs: Vec<&[T]> = vx.iter().map(Vec::as_slice).collect();
    let l0 = k0.apply(&refs)?;
    let l1 = k1.apply(&refs)?;
    let a: Vec<f64> = (0..n).map(|_| l0.sample_scalar(&mut rng).as_f64()).collect();
    let b: Vec<f64> = (0..n).map(|_| l1.sample_scalar(&mut rng).as_f64()).collect();
    Ok(HomogeneityGap { exact: false, gap: stats::ks_two_sample(&a, &b), critical: stats::ks_critical_001(n, n) })
}

/// Transition operator `T_t f(x) = ∫ P_{[0,t]\∅'}(x; dy) f(y)`.
///
/// Gaussian laws are integrated by Gauss–Hermite quadrature; other laws by
/// Monte Carlo with a fixed seed so that the operator is a deterministic map.
#[derive(Clone, Debug)]
pub struct SemigroupOp<T> {
    kernel: PreparedKernel<T>,
    nodes: (Vec<f64>, Vec<f64>),
    mc_samples: usize,
    seed: u64,
}

pub const GAUSS_HERMITE_NODES: usize = 64;

impl<T: Scalar> SemigroupOp<T> {
    pub fn new(spec: &KernelSpec<T>, family: &IndexFamily<T>, t: &IndexSet<T>, mc_samples: usize, seed: u64) -> Result<Self> {
        if spec.state_dim() != 1 {
            return Err(Error::Unsupported("transition operators on vector states".into()));
        }
        let base = family.empty_set();
        let inc = Increment::new(family, t.clone(), vec![base])?;
        Ok(SemigroupOp {
            kernel: PreparedKernel::new(spec, family, &inc)?,
            nodes: stats::gauss_hermite(GAUSS_HERMITE_NODES),
            mc_samples,
            seed,
        })
    }

    pub fn law(&self, x: T) -> Result<CondDist<T>> {
        self.kernel.apply(&[std::slice::from_ref(&x)])
    }

    pub fn apply(&self, f: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
        expectation(&self.law(T::lit(x))?, f, &self.nodes, self.mc_samples, self.seed)
    }
}

/// `E f(Y)` for `Y ~ law`.
pub fn expectation<T: Scalar>(
    law: &CondDist<T>,
    f: &dyn Fn(f64) -> f64,
    nodes: &(Vec<f64>, Vec<f64>),
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    match law {
        CondDist::PointMass(v) => Ok(f(v.as_f64())),
        CondDist::Gaussian { mean, var } => {
            Ok(stats::gaussian_expectation(f, mean.as_f64(), var.max(T::zero()).sqrt().as_f64(), nodes))
        }
        other => {
            if mc_samples == 0 {
                return Err(Error::InvalidParameter("Monte Carlo sample count must be > 0".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let total: f64 = (0..mc_samples).map(|_| f(other.sample_scalar(&mut rng).as_f64())).sum();
            Ok(total / mc_samples as f64)
        }
    }
}

/// `T_t f` tabulated on `grid`.
pub fn multiparameter_semigroup<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    t: &IndexSet<T>,
    f: &dyn Fn(f64) -> f64,
    grid: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let op = SemigroupOp::new(spec, family, t, mc_samples, seed)?;
    grid.iter().map(|&x| op.apply(f, x)).collect()
}

/// Sampling configuration for the Feller modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct FellerConfig {
    /// Index of the bounding set `B_m = [0, m·1]`.
    pub bound: usize,
    /// Number of sampled pairs `V ⊆ U`.
    pub pairs: usize,
    /// Evaluation grid for the sup norm.
    pub grid: Vec<f64>,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for FellerConfig {
    fn default() -> Self {
        FellerConfig {
            bound: 2,
            pairs: 32,
            grid: (0..=80).map(|i| -4.0 + 0.1 * i as f64).collect(),
            mc_samples: 20_000,
            seed: 0,
        }
    }
}

/// Estimate of `sup ‖P_{U\V} f − f‖_∞` over sampled pairs `V ⊆ U ⊆ B_m`
/// with `d_H(U, V) ≤ rho`: `V` uniform in `B_m` and `U = min(V + rho·1, B_m)`.
/// The same `V` draws are reused for every `rho`.
pub fn feller_modulus<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    rho: f64,
    f: &dyn Fn(f64) -> f64,
    cfg: &FellerConfig,
) -> Result<f64> {
    let dim = family
        .dim()
        .ok_or_else(|| Error::Unsupported("Feller modulus sampling needs a rectangle family".into()))?;
    if spec.state_dim() != 1 {
        return Err(Error::Unsupported("Feller modulus on vector states".into()));
    }
    if rho <= 0.0 {
        return Ok(0.0);
    }
    let m = cfg.bound as f64;
    let nodes = stats::gauss_hermite(GAUSS_HERMITE_NODES);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sup: f64 = 0.0;
    for _ in 0..cfg.pairs {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * m).collect();
        let u: Vec<f64> = v.iter().map(|x| (x + rho).min(m)).collect();
        let vs = IndexSet::rect_f64(&v);
        let us = IndexSet::rect_f64(&u);
        let inc = Increment::new(family, us, vec![vs])?;
        let k = PreparedKernel::new(spec, family, &inc)?;
        for &x in &cfg.grid {
            let xt = T::lit(x);
            let law = k.apply(&[std::slice::from_ref(&xt)])?;
            let pf = expectation(&law, f, &nodes, cfg.mc_samples, cfg.seed)?;
            sup = sup.max((pf - f(x)).abs());
        }
    }
    Ok(sup)
}

/// Moduli for each `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct FellerProfile {
    pub rhos: Vec<f64>,
    pub moduli: Vec<f64>,
}

impl FellerProfile {
    /// Whether the modulus does not grow as `rho` shrinks, up to a relative `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut pairs: Vec<(f64, f64)> = self.rhos.iter().copied().zip(self.moduli.iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + slack))
    }
}

pub fn feller_profile<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    rhos: &[f64],
    f: &dyn Fn(f64) -> f64,
    cfg: &FellerConfig,
) -> Result<FellerProfile> {
    let moduli = rhos
        .iter()
        .map(|&r| feller_modulus(spec, family, r, f, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(FellerProfile { rhos: rhos.to_vec(), moduli })
}
