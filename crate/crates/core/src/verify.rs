//! Executable Markov properties: exact Gaussian branches and statistical
//! branches for non-Gaussian kernels.

use crate::error::{Error, Result};
use crate::kernels::{homogeneity_gap, KernelSpec, LinearRow, PreparedKernel};
use crate::lattice::{Increment, IndexFamily, IndexSet, Semilattice};
use crate::linalg::{functional_discrepancy, project, Mat};
use crate::report::CheckReport;
use crate::sampler::{gaussian_fdd_moments, FddPlan, GaussianFdd, InitialLaw};
use crate::scalar::Scalar;
use crate::stats;

/// Tolerance of the exact Gaussian checks.
pub const EXACT_TOL: f64 = 1e-8;

fn require_gaussian<T: Scalar>(spec: &KernelSpec<T>) -> Result<()> {
    if spec.is_gaussian() {
        Ok(())
    } else {
        Err(Error::NonGaussian(format!("{spec:?}")))
    }
}

fn require_scalar<T: Scalar>(spec: &KernelSpec<T>) -> Result<()> {
    if spec.state_dim() == 1 {
        Ok(())
    } else {
        Err(Error::Unsupported("check defined for scalar states only".into()))
    }
}

/// Linear functional over the fdd variables for a kernel row whose frontier
/// set `i` sits at fdd set position `positions[i]`.
fn row_functional<T: Scalar>(row: &LinearRow<T>, positions: &[usize], dim: usize, nvars: usize) -> (Vec<T>, T) {
    let mut g = vec![T::zero(); nvars];
    for &(fi, comp, coef) in &row.terms {
        let v = positions[fi] * dim + comp;
        g[v] = g[v] + coef;
    }
    (g, row.constant)
}

fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[i] = T::one();
    e
}

fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

fn vars_of(sets: impl IntoIterator<Item = usize>, dim: usize) -> Vec<usize> {
    sets.into_iter().flat_map(|k| (0..dim).map(move |c| k * dim + c)).collect()
}

/// Conditional law of `X_A` given the frontier values and extra history
/// sets disjoint from `C`: coefficients on the extras must vanish and the
/// conditional moments must match the kernel.
pub fn cmarkov_conditional_check<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    inc: &Increment<T>,
    extras: &[IndexSet<T>],
) -> Result<CheckReport> {
    require_gaussian(spec)?;
    for e in extras {
        family.check(e)?;
        if !inc.disjoint_from(family, e)? {
            return Err(Error::HistoryIntersects(e.label()));
        }
    }
    let kernel = PreparedKernel::new(spec, family, inc)?;
    let p = kernel.frontier().len();
    let mut sets = vec![inc.outer().clone()];
    sets.extend(kernel.frontier().sets().iter().cloned());
    sets.extend(extras.iter().cloned());
    let fdd = gaussian_fdd_moments(spec, family, nu, &sets)?;
    let d = fdd.dim;
    let n = fdd.len();
    let (rows, vars) = kernel.gaussian_form()?;
    let positions: Vec<usize> = (1..=p).collect();
    let extra_vars = vars_of(p + 1..sets.len(), d);
    let mut block = vars_of(1..=p, d);
    block.extend(&extra_vars);

    let (mut worst_extra, mut worst_mean, mut worst_var) = (0.0f64, 0.0f64, 0.0f64);
    for c in 0..d {
        let proj = project(&fdd.mean, &fdd.cov, &unit(n, c), T::zero(), &block);
        for &v in &extra_vars {
            worst_extra = worst_extra.max(proj.coef[v].abs().as_f64());
        }
        let (g, k0) = row_functional(&rows[c], &positions, d, n);
        let disc = functional_discrepancy(&fdd.mean, &fdd.cov, &sub(&g, &proj.coef), k0 - proj.constant);
        worst_mean = worst_mean.max(disc.as_f64());
        worst_var = worst_var.max((proj.residual_var - vars[c]).abs().as_f64());
    }
    let disc = worst_extra.max(worst_mean).max(worst_var);
    Ok(CheckReport::exact("cmarkov-conditional", disc, EXACT_TOL)
        .with_detail("extra_coefficient", worst_extra)
        .with_detail("mean_discrepancy", worst_mean)
        .with_detail("variance_discrepancy", worst_var)
        .with_detail("frontier_size", p as f64))
}

/// The two-parameter increment `[0,(s+h,t+k)] \ ([0,(s,t)] ∪ [0,(s+h,t)] ∪ [0,(s,t+k)])`
/// has frontier `{(s+h,t), (s,t+k), (s,t)}` with weights `(+1, +1, −1)`.
/// With `h = 0` or `k = 0` the frontier must be a chain.
pub fn star_markov_correspondence<T: Scalar>(s: T, t: T, h: T, k: T) -> Result<CheckReport> {
    let family = IndexFamily::rect(2);
    let a = IndexSet::rect([s + h, t + k]);
    let parts = vec![IndexSet::rect([s, t]), IndexSet::rect([s + h, t]), IndexSet::rect([s, t + k])];
    let inc = Increment::new(&family, a, parts)?;
    let fr = crate::lattice::Frontier::new(&family, &inc)?;
    let mismatches = if h > T::zero() && k > T::zero() {
        let expected = [
            (IndexSet::rect([s + h, t]), 1),
            (IndexSet::rect([s, t + k]), 1),
            (IndexSet::rect([s, t]), -1),
        ];
        let mut miss = (fr.len() as i64 - 3).unsigned_abs() as f64;
        for (set, w) in expected {
            match fr.sets().iter().position(|x| *x == set) {
                Some(i) if fr.weights()[i] == w => {}
                _ => miss += 1.0,
            }
        }
        miss
    } else {
        let chain = fr
            .sets()
            .iter()
            .all(|a| fr.sets().iter().all(|b| family.subset(a, b) || family.subset(b, a)));
        if chain {
            0.0
        } else {
            1.0
        }
    };
    Ok(CheckReport::exact("star-markov", mismatches, 0.0).with_detail("frontier_size", fr.len() as f64))
}

/// Sets of `sl` inside `B = ∪ parts` but not in its interior.
pub fn boundary_sets<T: Scalar>(family: &IndexFamily<T>, sl: &Semilattice<T>, parts: &[IndexSet<T>]) -> Vec<IndexSet<T>> {
    sl.sets()
        .iter()
        .filter(|a| parts.iter().any(|p| family.subset(a, p)))
        .filter(|a| !parts.iter().any(|p| family.strictly_inside(a, p)))
        .cloned()
        .collect()
}

/// Conditional cross-covariance between inside and outside values given
/// the boundary block of `B = ∪ b_parts`.
pub fn sharp_markov_check<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    b_parts: &[IndexSet<T>],
    inside: &[IndexSet<T>],
    outside: &[IndexSet<T>],
) -> Result<CheckReport> {
    require_gaussian(spec)?;
    let in_b = |a: &IndexSet<T>| b_parts.iter().any(|p| family.subset(a, p));
    if let Some(a) = inside.iter().find(|a| !in_b(a)) {
        return Err(Error::InvalidParameter(format!("inside set {a} is not contained in B")));
    }
    if let Some(a) = outside.iter().find(|a| in_b(a)) {
        return Err(Error::InvalidParameter(format!("outside set {a} is contained in B")));
    }
    let mut gens: Vec<IndexSet<T>> = b_parts.to_vec();
    gens.extend(inside.iter().cloned());
    gens.extend(outside.iter().cloned());
    let sl = Semilattice::closure(family, &gens)?;
    let boundary = boundary_sets(family, &sl, b_parts);
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut sets = inside.to_vec();
    sets.extend(outside.iter().cloned());
    sets.extend(boundary.iter().cloned());
    let fdd = gaussian_fdd_moments(spec, family, nu, &sets)?;
    let d = fdd.dim;
    let n = fdd.len();
    let ni = inside.len();
    let no = outside.len();
    let bblock = vars_of(ni + no..sets.len(), d);
    let residual = |v: usize| -> Vec<T> {
        let e = unit(n, v);
        let proj = project(&fdd.mean, &fdd.cov, &e, T::zero(), &bblock);
        sub(&e, &proj.coef)
    };
    let r_in: Vec<Vec<T>> = vars_of(0..ni, d).into_iter().map(residual).collect();
    let r_out: Vec<Vec<T>> = vars_of(ni..ni + no, d).into_iter().map(residual).collect();
    let mut worst: f64 = 0.0;
    for a in &r_in {
        let sa = fdd.cov.mul_vec(a);
        for b in &r_out {
            worst = worst.max(crate::linalg::dot(&sa, b).abs().as_f64());
        }
    }
    Ok(CheckReport::exact("sharp-markov", worst, EXACT_TOL).with_detail("boundary_size", boundary.len() as f64))
}

/// `E[E[Y|F_U]|F_V]` against `E[Y|F_{U∩V}]` for `Y = Σ y_coefs[j]·X_{y_sets[j]}`,
/// with `F_W` generated by the closure members contained in `W`.
pub fn commuting_filtration_check<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    u: &IndexSet<T>,
    v: &IndexSet<T>,
    y_sets: &[IndexSet<T>],
    y_coefs: &[T],
) -> Result<CheckReport> {
    require_gaussian(spec)?;
    require_scalar(spec)?;
    if y_sets.len() != y_coefs.len() || y_sets.is_empty() {
        return Err(Error::ArityMismatch { expected: y_sets.len(), got: y_coefs.len() });
    }
    let uv = family.intersect(u, v)?;
    let mut gens = vec![u.clone(), v.clone()];
    gens.extend(y_sets.iter().cloned());
    let sl = Semilattice::closure(family, &gens)?;
    let sets: Vec<IndexSet<T>> = sl.sets().to_vec();
    let fdd = gaussian_fdd_moments(spec, family, nu, &sets)?;
    let n = fdd.len();
    let block_of = |w: &IndexSet<T>| -> Vec<usize> {
        // members of U∩V first so that they win degenerate pivots
        let mut first: Vec<usize> = (0..sets.len()).filter(|&i| family.subset(&sets[i], &uv)).collect();
        first.reverse();
        let rest: Vec<usize> = (0..sets.len())
            .rev()
            .filter(|&i| family.subset(&sets[i], w) && !family.subset(&sets[i], &uv))
            .collect();
        first.extend(rest);
        first
    };
    let mut g = vec![T::zero(); n];
    for (s, &c) in y_sets.iter().zip(y_coefs) {
        let i = sl.position(s).expect("Y set in closure");
        g[i] = g[i] + c;
    }
    let pu = project(&fdd.mean, &fdd.cov, &g, T::zero(), &block_of(u));
    let pvu = project(&fdd.mean, &fdd.cov, &pu.coef, pu.constant, &block_of(v));
    let puv = project(&fdd.mean, &fdd.cov, &g, T::zero(), &block_of(&uv));
    let disc = functional_discrepancy(&fdd.mean, &fdd.cov, &sub(&pvu.coef, &puv.coef), pvu.constant - puv.constant);
    let coef_gap = pvu
        .coef
        .iter()
        .zip(&puv.coef)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    Ok(CheckReport::exact("commuting-filtration", disc.as_f64(), EXACT_TOL)
        .with_detail("coefficient_gap", coef_gap.as_f64()))
}

fn check_flow<T: Scalar>(family: &IndexFamily<T>, flow: &[IndexSet<T>]) -> Result<()> {
    for (i, w) in flow.windows(2).enumerate() {
        if !family.subset(&w[0], &w[1]) || w[0] == w[1] {
            return Err(Error::NonMonotoneFlow(i + 1));
        }
    }
    Ok(())
}

/// Markov property of the projection along an increasing flow: the law of
/// `X_{f(t_k)}` given all earlier flow values depends only on `X_{f(t_{k-1})}`
/// through the kernel of the simple increment `f(t_k) \ f(t_{k-1})`.
///
/// Gaussian kernels are checked exactly. Otherwise `n` replicates are drawn;
/// the kernel residual must be uncorrelated (after `atan`) with earlier
/// values within 3 standard errors, and match the kernel's noise law under a
/// 1% two-sample KS test. Discrepancy is the worst ratio to its bound.
pub fn flow_projection_check<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    flow: &[IndexSet<T>],
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    require_scalar(spec)?;
    for s in flow {
        family.check(s)?;
    }
    check_flow(family, flow)?;
    if flow.len() < 2 {
        return Ok(CheckReport::exact("flow-projection", 0.0, EXACT_TOL));
    }
    let kernels = flow
        .windows(2)
        .map(|w| PreparedKernel::new(spec, family, &Increment::new(family, w[1].clone(), vec![w[0].clone()])?))
        .collect::<Result<Vec<_>>>()?;
    if spec.is_gaussian() && !matches!(nu, InitialLaw::Custom(_)) {
        let fdd = gaussian_fdd_moments(spec, family, nu, flow)?;
        let n_vars = fdd.len();
        let mut worst_old: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for k in 1..flow.len() {
            let block: Vec<usize> = (0..k).rev().collect();
            let proj = project(&fdd.mean, &fdd.cov, &unit(n_vars, k), T::zero(), &block);
            for j in 0..k - 1 {
                worst_old = worst_old.max(proj.coef[j].abs().as_f64());
            }
            let (rows, vars) = kernels[k - 1].gaussian_form()?;
            let (g, c) = row_functional(&rows[0], &[k - 1], 1, n_vars);
            let disc = functional_discrepancy(&fdd.mean, &fdd.cov, &sub(&g, &proj.coef), c - proj.constant);
            worst = worst.max(disc.as_f64()).max((proj.residual_var - vars[0]).abs().as_f64());
        }
        return Ok(CheckReport::exact("flow-projection", worst.max(worst_old), EXACT_TOL)
            .with_detail("older_coefficient", worst_old));
    }
    let plan = FddPlan::new(spec, family, flow)?;
    let draws = plan.sample_many(nu, n, seed)?;
    let pos: Vec<usize> = flow.iter().map(|s| plan.semilattice().position(s).unwrap()).collect();
    let mut rng = crate::sampler::replicate_rng(seed, u64::MAX - 1);
    let corr_bound = 3.0 / (n as f64).sqrt();
    let ks_bound = stats::ks_critical_001(n, n);
    let mut worst: f64 = 0.0;
    for k in 1..flow.len() {
        let row = &kernels[k - 1].center_form()[0];
        let coef = row.terms.iter().map(|t| t.2).fold(T::zero(), |s, c| s + c);
        let resid: Vec<f64> = draws
            .iter()
            .map(|v| (v[pos[k]] - coef * v[pos[k - 1]] - row.constant).as_f64())
            .collect();
        let at: Vec<f64> = resid.iter().map(|r| r.atan()).collect();
        for &p in &pos[..k] {
            let prev: Vec<f64> = draws.iter().map(|v| v[p].as_f64().atan()).collect();
            if stats::variance(&prev) > 0.0 {
                worst = worst.max(stats::correlation(&at, &prev).abs() / corr_bound);
            }
        }
        let zero = [T::zero()];
        let law = kernels[k - 1].apply(&[&zero])?;
        let reference: Vec<f64> = (0..n).map(|_| (law.sample_scalar(&mut rng) - row.constant).as_f64()).collect();
        worst = worst.max(stats::ks_two_sample(&resid, &reference) / ks_bound);
    }
    Ok(CheckReport::statistical("flow-projection", worst, 1.0, n, seed))
}

/// Shifted-process check: given `F_U`, the law of `(X_{θ_U(A_i)})_i` is the
/// law of `(X_{A_i})_i` started at `X_U`.
///
/// The kernel must be homogeneous on every left-neighbourhood of the
/// closure of `sets` (exact gap below 1e-10, or KS for non-Gaussian
/// kernels); otherwise `Error::Inhomogeneous`. Gaussian kernels are then
/// compared exactly through conditional moments. Otherwise starts `0` and
/// `1` with common random numbers give the affine start dependence, and the
/// shifted residuals are compared with the `δ_0` law by KS and tested for
/// `atan`-correlation with `X_U`.
pub fn simple_markov_shift_check<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    u: &IndexSet<T>,
    sets: &[IndexSet<T>],
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    require_scalar(spec)?;
    if sets.is_empty() {
        return Err(Error::InvalidParameter("no target sets".into()));
    }
    let base = Semilattice::closure(family, sets)?;
    let mut worst_gap: f64 = 0.0;
    for i in 1..base.len() {
        let inc = base.left_neighborhood(family, i)?;
        let gap = homogeneity_gap(spec, family, &inc, u, n.clamp(1000, 20_000), seed ^ i as u64)?;
        let homogeneous = gap.is_homogeneous(1e-10);
        worst_gap = worst_gap.max(gap.gap);
        if !homogeneous {
            return Err(Error::Inhomogeneous(gap.gap));
        }
    }
    let shifted = sets.iter().map(|a| family.shift(a, u)).collect::<Result<Vec<_>>>()?;
    let mut gens = vec![u.clone()];
    gens.extend(shifted.iter().cloned());
    let closure = Semilattice::closure(family, &gens)?;
    // F_U block: U first, then the other closure members inside U
    let mut history = vec![u.clone()];
    history.extend(
        closure
            .sets()
            .iter()
            .rev()
            .filter(|s| *s != u && family.subset(s, u))
            .cloned(),
    );
    let m = sets.len();

    if spec.is_gaussian() && !matches!(nu, InitialLaw::Custom(_)) {
        let mut all = history.clone();
        all.extend(shifted.iter().cloned());
        let fdd = gaussian_fdd_moments(spec, family, nu, &all)?;
        let nv = fdd.len();
        let hblock: Vec<usize> = (0..history.len()).collect();
        let from0 = gaussian_fdd_moments(spec, family, &InitialLaw::PointMass(T::zero()), sets)?;
        let from1 = gaussian_fdd_moments(spec, family, &InitialLaw::PointMass(T::one()), sets)?;
        let mut resid = Vec::with_capacity(m);
        let mut worst: f64 = 0.0;
        for j in 0..m {
            let var = history.len() + j;
            let proj = project(&fdd.mean, &fdd.cov, &unit(nv, var), T::zero(), &hblock);
            let a = from0.mean[j];
            let b = from1.mean[j] - from0.mean[j];
            let mut target = vec![T::zero(); nv];
            target[0] = b;
            let disc = functional_discrepancy(&fdd.mean, &fdd.cov, &sub(&proj.coef, &target), proj.constant - a);
            worst = worst.max(disc.as_f64());
            resid.push(sub(&unit(nv, var), &proj.coef));
        }
        for j in 0..m {
            let sj = fdd.cov.mul_vec(&resid[j]);
            for k in 0..m {
                let c = crate::linalg::dot(&sj, &resid[k]);
                worst = worst.max((c - from0.cov.get(j, k)).abs().as_f64());
            }
        }
        return Ok(CheckReport::exact("simple-markov-shift", worst, EXACT_TOL).with_detail("homogeneity_gap", worst_gap));
    }

    let plan = FddPlan::new(spec, family, &gens)?;
    let draws = plan.sample_many(nu, n, seed)?;
    let up = plan.semilattice().position(u).unwrap();
    let start_plan = FddPlan::new(spec, family, sets)?;
    let d0 = start_plan.sample_many(&InitialLaw::PointMass(T::zero()), n, seed ^ 0x5eed)?;
    let d1 = start_plan.sample_many(&InitialLaw::PointMass(T::one()), n, seed ^ 0x5eed)?;
    let corr_bound = 3.0 / (n as f64).sqrt();
    let ks_bound = stats::ks_critical_001(n, n);
    let xu: Vec<f64> = draws.iter().map(|v| v[up].as_f64().atan()).collect();
    let mut worst: f64 = 0.0;
    for (s, a) in shifted.iter().zip(sets) {
        let sp = plan.semilattice().position(s).unwrap();
        let ap = start_plan.semilattice().position(a).unwrap();
        let b = d1[0][ap] - d0[0][ap];
        let resid: Vec<f64> = draws.iter().map(|v| (v[sp] - b * v[up]).as_f64()).collect();
        let reference: Vec<f64> = d0.iter().map(|v| v[ap].as_f64()).collect();
        worst = worst.max(stats::ks_two_sample(&resid, &reference) / ks_bound);
        if stats::variance(&xu) > 0.0 {
            let at: Vec<f64> = resid.iter().map(|r| r.atan()).collect();
            worst = worst.max(stats::correlation(&at, &xu).abs() / corr_bound);
        }
    }
    Ok(CheckReport::statistical("simple-markov-shift", worst, 1.0, n, seed).with_detail("homogeneity_gap", worst_gap))
}

/// Conditional covariance of block `a` given block `b` (variable indices).
pub fn conditional_covariance<T: Scalar>(fdd: &GaussianFdd<T>, a: &[usize], b: &[usize]) -> Mat<T> {
    let n = fdd.len();
    let resid: Vec<Vec<T>> = a
        .iter()
        .map(|&i| {
            let e = unit(n, i);
            let p = project(&fdd.mean, &fdd.cov, &e, T::zero(), b);
            sub(&e, &p.coef)
        })
        .collect();
    let mut out = Mat::zeros(a.len(), a.len());
    for (i, ri) in resid.iter().enumerate() {
        let si = fdd.cov.mul_vec(ri);
        for (j, rj) in resid.iter().enumerate() {
            out.set(i, j, crate::linalg::dot(&si, rj));
        }
    }
    out
}
