//! Finite-dimensional distributions by sequential sampling over
//! left-neighbourhoods, and their exact moments for Gaussian kernels.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, PreparedKernel};
use crate::lattice::{IndexFamily, IndexSet, Semilattice, TieBreak, DEFAULT_CLOSURE_CAP};
use crate::linalg::{check_psd, Mat};
use crate::report::CheckReport;
use crate::scalar::Scalar;
use crate::stats;

/// Default cap on grid sizes for [`sample_grid`].
pub const DEFAULT_GRID_CAP: usize = 1 << 16;

/// Law of `X_{∅'}`. Vector states draw each component independently.
#[derive(Clone)]
pub enum InitialLaw<T> {
    PointMass(T),
    Gaussian { mean: T, var: T },
    Custom(Arc<dyn Fn(&mut dyn RngCore) -> T + Send + Sync>),
}

impl<T: Scalar> Default for InitialLaw<T> {
    fn default() -> Self {
        InitialLaw::PointMass(T::zero())
    }
}

impl<T: fmt::Debug> fmt::Debug for InitialLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialLaw::PointMass(x) => f.debug_tuple("PointMass").field(x).finish(),
            InitialLaw::Gaussian { mean, var } => {
                f.debug_struct("Gaussian").field("mean", mean).field("var", var).finish()
            }
            InitialLaw::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<T: Scalar> InitialLaw<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::Gaussian { var, .. } if !(*var >= T::zero()) => {
                Err(Error::InvalidParameter("initial variance must be >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    fn sample<R: RngCore>(&self, rng: &mut R) -> T {
        match self {
            InitialLaw::PointMass(x) => *x,
            InitialLaw::Gaussian { mean, var } => *mean + var.sqrt() * T::sample_standard_normal(rng),
            InitialLaw::Custom(f) => f(rng),
        }
    }

    /// Mean and variance for the Gaussian oracle.
    fn moments(&self) -> Result<(T, T)> {
        match self {
            InitialLaw::PointMass(x) => Ok((*x, T::zero())),
            InitialLaw::Gaussian { mean, var } => Ok((*mean, *var)),
            InitialLaw::Custom(_) => Err(Error::NonGaussian("custom initial law".into())),
        }
    }
}

/// The replicate RNG: ChaCha8 keyed by the master seed, with the replicate
/// index as stream number.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Clone, Debug)]
struct Step<T> {
    kernel: PreparedKernel<T>,
    /// Semilattice positions of the frontier sets.
    inputs: Vec<usize>,
}

/// Kernels prepared for every left-neighbourhood of a semilattice.
#[derive(Clone, Debug)]
pub struct FddPlan<T> {
    semilattice: Semilattice<T>,
    steps: Vec<Step<T>>,
    dim: usize,
}

impl<T: Scalar> FddPlan<T> {
    /// Plan over the closure of `sets`, numbered canonically.
    pub fn new(spec: &KernelSpec<T>, family: &IndexFamily<T>, sets: &[IndexSet<T>]) -> Result<Self> {
        Self::with_tie_break(spec, family, sets, TieBreak::Canonical)
    }

    pub fn with_tie_break(
        spec: &KernelSpec<T>,
        family: &IndexFamily<T>,
        sets: &[IndexSet<T>],
        tie: TieBreak,
    ) -> Result<Self> {
        let sl = Semilattice::closure_with(family, sets, DEFAULT_CLOSURE_CAP, tie)?;
        Self::from_semilattice(spec, family, sl)
    }

    pub fn from_semilattice(spec: &KernelSpec<T>, family: &IndexFamily<T>, semilattice: Semilattice<T>) -> Result<Self> {
        spec.validate(family)?;
        let mut steps = Vec::with_capacity(semilattice.len().saturating_sub(1));
        for i in 1..semilattice.len() {
            let inc = semilattice.left_neighborhood(family, i)?;
            if inc.is_empty() {
                return Err(Error::Inconsistent(format!("empty left neighbourhood at {}", semilattice.get(i))));
            }
            let kernel = PreparedKernel::new(spec, family, &inc)?;
            let inputs = kernel
                .frontier()
                .sets()
                .iter()
                .map(|s| {
                    semilattice
                        .position(s)
                        .filter(|&j| j < i)
                        .ok_or_else(|| Error::Inconsistent(format!("frontier set {s} not numbered before {i}")))
                })
                .collect::<Result<Vec<_>>>()?;
            steps.push(Step { kernel, inputs });
        }
        Ok(FddPlan { semilattice, steps, dim: spec.state_dim() })
    }

    pub fn semilattice(&self) -> &Semilattice<T> {
        &self.semilattice
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    /// One draw; `values[p*dim + c]` is component `c` at semilattice position `p`.
    pub fn sample_with<R: RngCore>(&self, nu: &InitialLaw<T>, rng: &mut R) -> Result<Vec<T>> {
        let d = self.dim;
        let mut values: Vec<T> = Vec::with_capacity(self.semilattice.len() * d);
        for _ in 0..d {
            values.push(nu.sample(rng));
        }
        let mut out = Vec::with_capacity(d);
        for step in &self.steps {
            let law = {
                let vx: Vec<&[T]> = step.inputs.iter().map(|&j| &values[j * d..(j + 1) * d]).collect();
                step.kernel.apply(&vx)?
            };
            out.clear();
            law.sample_into(rng, &mut out);
            values.extend_from_slice(&out);
        }
        Ok(values)
    }

    /// `n` independent replicates, replicate `i` drawn from `replicate_rng(seed, i)`.
    pub fn sample_many(&self, nu: &InitialLaw<T>, n: usize, seed: u64) -> Result<Vec<Vec<T>>> {
        (0..n)
            .into_par_iter()
            .map(|i| self.sample_with(nu, &mut replicate_rng(seed, i as u64)))
            .collect()
    }

    /// Exact mean and covariance of every semilattice variable.
    pub fn gaussian_moments(&self, nu: &InitialLaw<T>) -> Result<GaussianFdd<T>> {
        let d = self.dim;
        let (m0, v0) = nu.moments()?;
        let nvars = self.semilattice.len() * d;
        let mut mean = Vec::with_capacity(nvars);
        let mut load: Vec<Vec<T>> = Vec::with_capacity(nvars);
        for c in 0..d {
            mean.push(m0);
            let mut row = vec![T::zero(); nvars];
            row[c] = v0.sqrt();
            load.push(row);
        }
        for (k, step) in self.steps.iter().enumerate() {
            let (rows, vars) = step.kernel.gaussian_form()?;
            let pos = k + 1;
            for (c, (row, var)) in rows.iter().zip(&vars).enumerate() {
                let mut mu = row.constant;
                let mut l = vec![T::zero(); nvars];
                for &(fi, comp, coef) in &row.terms {
                    let src = step.inputs[fi] * d + comp;
                    mu = mu + coef * mean[src];
                    for (a, b) in l.iter_mut().zip(&load[src]) {
                        *a = *a + coef * *b;
                    }
                }
                l[pos * d + c] = var.max(T::zero()).sqrt();
                mean.push(mu);
                load.push(l);
            }
        }
        let cov = Mat::from_rows(&load).outer_gram();
        Ok(GaussianFdd { sets: self.semilattice.sets().to_vec(), dim: d, mean, cov })
    }
}

/// One draw of the finite-dimensional distribution on a semilattice.
#[derive(Clone, Debug, PartialEq)]
pub struct FddSample<T> {
    pub semilattice: Semilattice<T>,
    /// `values[p]` holds the state at semilattice position `p`.
    pub values: Vec<Vec<T>>,
    pub seed: u64,
}

impl<T: Scalar> FddSample<T> {
    pub fn get(&self, set: &IndexSet<T>) -> Option<&[T]> {
        self.semilattice.position(set).map(|p| self.values[p].as_slice())
    }
}

/// Samples the closure of `sets`: `X_{∅'} ~ ν`, then each left-neighbourhood
/// in turn from its kernel. Uses replicate stream 0 of `seed`.
pub fn sample_fdd<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    sets: &[IndexSet<T>],
    seed: u64,
) -> Result<FddSample<T>> {
    nu.validate()?;
    let plan = FddPlan::new(spec, family, sets)?;
    let flat = plan.sample_with(nu, &mut replicate_rng(seed, 0))?;
    let d = plan.state_dim();
    let values = flat.chunks(d).map(<[T]>::to_vec).collect();
    Ok(FddSample { semilattice: plan.semilattice, values, seed })
}

/// Values on a full cartesian grid, streamed in lexicographic corner order
/// (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSample<T> {
    pub corners: Vec<IndexSet<T>>,
    /// `values[r][k]`: replicate `r`, corner `k`, component 0.
    pub values: Vec<Vec<T>>,
}

pub fn sample_grid<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    axes: &[Vec<T>],
    replicates: usize,
    seed: u64,
) -> Result<GridSample<T>> {
    nu.validate()?;
    let sl = Semilattice::rect_grid(family, axes, DEFAULT_GRID_CAP)?;
    let plan = FddPlan::from_semilattice(spec, family, sl)?;
    let mut corners: Vec<Vec<T>> = vec![Vec::new()];
    for axis in axes {
        corners = corners
            .iter()
            .flat_map(|c| {
                axis.iter().map(move |&t| {
                    let mut d = c.clone();
                    d.push(t);
                    d
                })
            })
            .collect();
    }
    let corners: Vec<IndexSet<T>> = corners.into_iter().map(IndexSet::Rect).collect();
    let positions: Vec<usize> = corners
        .iter()
        .map(|c| plan.semilattice().position(c).expect("grid corner in grid semilattice"))
        .collect();
    let d = plan.state_dim();
    let draws = plan.sample_many(nu, replicates, seed)?;
    let values = draws
        .into_iter()
        .map(|v| positions.iter().map(|&p| v[p * d]).collect())
        .collect();
    Ok(GridSample { corners, values })
}

/// Exact joint law of Gaussian process values.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFdd<T> {
    /// Sets in the order requested; variable `k*dim + c` is component `c` at `sets[k]`.
    pub sets: Vec<IndexSet<T>>,
    pub dim: usize,
    pub mean: Vec<T>,
    pub cov: Mat<T>,
}

impl<T: Scalar> GaussianFdd<T> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn var_index(&self, set: usize, component: usize) -> usize {
        set * self.dim + component
    }

    /// Restriction to the given set positions.
    pub fn marginal(&self, keep: &[usize]) -> GaussianFdd<T> {
        let idx: Vec<usize> = keep
            .iter()
            .flat_map(|&k| (0..self.dim).map(move |c| k * self.dim + c))
            .collect();
        GaussianFdd {
            sets: keep.iter().map(|&k| self.sets[k].clone()).collect(),
            dim: self.dim,
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            cov: self.cov.select(&idx),
        }
    }

    pub fn max_abs_diff(&self, other: &GaussianFdd<T>) -> T {
        let m = self
            .mean
            .iter()
            .zip(&other.mean)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        m.max(self.cov.max_abs_diff(&other.cov))
    }
}

/// Exact mean vector and covariance of `(X_A)_{A ∈ sets}` for Gaussian
/// kernels, via the linear recursion through left-neighbourhoods.
pub fn gaussian_fdd_moments<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    sets: &[IndexSet<T>],
) -> Result<GaussianFdd<T>> {
    gaussian_fdd_moments_with(spec, family, nu, sets, TieBreak::Canonical)
}

pub fn gaussian_fdd_moments_with<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    sets: &[IndexSet<T>],
    tie: TieBreak,
) -> Result<GaussianFdd<T>> {
    if !spec.is_gaussian() {
        return Err(Error::NonGaussian(format!("{spec:?}")));
    }
    nu.validate()?;
    let plan = FddPlan::with_tie_break(spec, family, sets, tie)?;
    let full = plan.gaussian_moments(nu)?;
    let keep: Vec<usize> = sets
        .iter()
        .map(|s| plan.semilattice().position(s).expect("input set in its closure"))
        .collect();
    let out = full.marginal(&keep);
    let scale = (0..out.cov.rows()).fold(T::one(), |m, i| m.max(out.cov.get(i, i).abs()));
    check_psd(&out.cov, T::lit(1e-10) * scale)?;
    Ok(out)
}

/// Compares the law under the canonical and the reversed numbering of the
/// closure. Gaussian kernels: exact moments to 1e-12. Otherwise: per-set
/// two-sample KS on `replicates` draws at the 1% level.
pub fn numbering_invariance_check<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    nu: &InitialLaw<T>,
    sets: &[IndexSet<T>],
    replicates: usize,
    seed: u64,
) -> Result<CheckReport> {
    if spec.is_gaussian() && !matches!(nu, InitialLaw::Custom(_)) {
        let a = gaussian_fdd_moments_with(spec, family, nu, sets, TieBreak::Canonical)?;
        let b = gaussian_fdd_moments_with(spec, family, nu, sets, TieBreak::Reversed)?;
        return Ok(CheckReport::exact("numbering-invariance", a.max_abs_diff(&b).as_f64(), 1e-12));
    }
    let pa = FddPlan::with_tie_break(spec, family, sets, TieBreak::Canonical)?;
    let pb = FddPlan::with_tie_break(spec, family, sets, TieBreak::Reversed)?;
    let da = pa.sample_many(nu, replicates, seed)?;
    let db = pb.sample_many(nu, replicates, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    let d = pa.state_dim();
    let mut worst: f64 = 0.0;
    for s in sets {
        let ia = pa.semilattice().position(s).unwrap() * d;
        let ib = pb.semilattice().position(s).unwrap() * d;
        let xa: Vec<f64> = da.iter().map(|v| v[ia].as_f64()).collect();
        let xb: Vec<f64> = db.iter().map(|v| v[ib].as_f64()).collect();
        worst = worst.max(stats::ks_two_sample(&xa, &xb));
    }
    Ok(CheckReport::statistical(
        "numbering-invariance",
        worst,
        stats::ks_critical_001(replicates, replicates),
        replicates,
        seed,
    ))
}

/// Draws `n` values from `law` using the given seed.
pub fn sample_law<T: Scalar, R: Rng>(law: &crate::kernels::CondDist<T>, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| law.sample_scalar(rng).as_f64()).collect()
}
