use super::dist::CondDist;
use super::spec::{product_factors, KernelSpec, MarginalClass};
use crate::error::{Error, Result};
use crate::lattice::{measure, Frontier, Increment, IndexFamily, IndexSet};
use crate::scalar::Scalar;

/// One output component written as `constant + Σ coef·x_{Cp_frontier}[component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow<T> {
    /// `(frontier index, state component, coefficient)`.
    pub terms: Vec<(usize, usize, T)>,
    pub constant: T,
}

/// A kernel bound to one increment: frontier, measures and coefficients are
/// computed once and reused for every draw.
#[derive(Clone, Debug)]
pub struct PreparedKernel<T> {
    frontier: Frontier<T>,
    dim: usize,
    body: Body<T>,
}

#[derive(Clone, Debug)]
enum Body<T> {
    /// Point mass at `Δx_B`.
    Point,
    Levy { marginal: MarginalClass<T>, time: T },
    Ou { alpha: T, coefs: Vec<T>, sigma_c: T },
    Product(Vec<FactorPlan<T>>),
    Additive(Vec<(MarginalClass<T>, T)>),
}

#[derive(Clone, Debug)]
struct FactorPlan<T> {
    kernel: PreparedKernel<T>,
    /// Factor frontier position → product frontier position.
    lookup: Vec<usize>,
    offset: usize,
}

impl<T: Scalar> PreparedKernel<T> {
    pub fn new(spec: &KernelSpec<T>, family: &IndexFamily<T>, inc: &Increment<T>) -> Result<Self> {
        let frontier = Frontier::new(family, inc)?;
        let dim = spec.state_dim();
        if inc.is_empty() {
            return Ok(PreparedKernel { frontier, dim, body: Body::Point });
        }
        let body = match spec {
            KernelSpec::Dirac => Body::Point,
            KernelSpec::Levy { marginal } => Body::Levy { marginal: marginal.clone(), time: measure(family, inc)? },
            KernelSpec::Ou { alpha, lambda, sigma } => {
                let m_a = family.set_measure(inc.outer());
                let coefs = frontier
                    .sets()
                    .iter()
                    .enumerate()
                    .map(|(i, s)| frontier.weight(i) * (-*lambda * (m_a - family.set_measure(s))).exp())
                    .collect();
                let sigma_c = ou_sigma_from(*alpha, *lambda, *sigma, family, &frontier, inc)?;
                Body::Ou { alpha: *alpha, coefs, sigma_c }
            }
            KernelSpec::Product { factors } => {
                let fams = product_factors(family, factors.len())?;
                let mut plans = Vec::with_capacity(factors.len());
                let mut offset = 0;
                for (i, (k, f)) in factors.iter().zip(fams).enumerate() {
                    let ci = factor_increment(family, inc, i)?;
                    let kernel = PreparedKernel::new(k, f, &ci)?;
                    let lookup = factor_lookup(&frontier, kernel.frontier(), i)?;
                    plans.push(FactorPlan { kernel, lookup, offset });
                    offset += k.state_dim();
                }
                Body::Product(plans)
            }
            KernelSpec::AdditiveLevy { factors } => {
                let fams = product_factors(family, factors.len())?;
                let mut parts = Vec::with_capacity(factors.len());
                for (i, (mc, f)) in factors.iter().zip(fams).enumerate() {
                    let ci = factor_increment(family, inc, i)?;
                    parts.push((mc.clone(), measure(f, &ci)?));
                }
                Body::Additive(parts)
            }
        };
        Ok(PreparedKernel { frontier, dim, body })
    }

    pub fn frontier(&self) -> &Frontier<T> {
        &self.frontier
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    /// `σ_C` for OU kernels.
    pub fn ou_sigma(&self) -> Option<T> {
        match self.body {
            Body::Ou { sigma_c, .. } => Some(sigma_c),
            Body::Point => Some(T::zero()),
            _ => None,
        }
    }

    fn check_values(&self, vx: &[&[T]]) -> Result<()> {
        if vx.len() != self.frontier.len() {
            return Err(Error::ArityMismatch { expected: self.frontier.len(), got: vx.len() });
        }
        if let Some(bad) = vx.iter().find(|v| v.len() != self.dim) {
            return Err(Error::ArityMismatch { expected: self.dim, got: bad.len() });
        }
        Ok(())
    }

    fn delta(&self, vx: &[&[T]], component: usize) -> T {
        vx.iter()
            .enumerate()
            .fold(T::zero(), |s, (i, v)| s + self.frontier.weight(i) * v[component])
    }

    /// Conditional law of `X_A` given `vx`, one slice of state components per frontier set.
    pub fn apply(&self, vx: &[&[T]]) -> Result<CondDist<T>> {
        self.check_values(vx)?;
        Ok(match &self.body {
            Body::Point => {
                if self.dim == 1 {
                    CondDist::PointMass(self.delta(vx, 0))
                } else {
                    CondDist::Independent((0..self.dim).map(|c| CondDist::PointMass(self.delta(vx, c))).collect())
                }
            }
            Body::Levy { marginal, time } => marginal_at(marginal, *time, self.delta(vx, 0)),
            Body::Ou { alpha, coefs, sigma_c } => {
                let mean = vx.iter().zip(coefs).fold(T::zero(), |s, (v, c)| s + *c * v[0]);
                if *alpha == T::lit(2.0) {
                    CondDist::Gaussian { mean, var: *sigma_c * *sigma_c }
                } else {
                    CondDist::ShiftedStable { alpha: *alpha, scale: *sigma_c, shift: mean }
                }
            }
            Body::Product(plans) => {
                let mut comps = Vec::with_capacity(self.dim);
                for plan in plans {
                    let fd = plan.kernel.state_dim();
                    let fvx: Vec<&[T]> = plan.lookup.iter().map(|&j| &vx[j][plan.offset..plan.offset + fd]).collect();
                    match plan.kernel.apply(&fvx)? {
                        CondDist::Independent(cs) => comps.extend(cs),
                        d => comps.push(d),
                    }
                }
                CondDist::Independent(comps)
            }
            Body::Additive(parts) => {
                let shift = self.delta(vx, 0);
                if parts.iter().all(|(m, _)| m.is_gaussian()) {
                    let var = parts.iter().fold(T::zero(), |s, (m, t)| s + gaussian_rate(m) * *t);
                    CondDist::Gaussian { mean: shift, var }
                } else {
                    let laws = parts.iter().map(|(m, t)| marginal_at(m, *t, T::zero())).collect();
                    CondDist::Convolution { shift, parts: laws }
                }
            }
        })
    }

    /// Location functional of the conditional law, one row per component:
    /// `Δx_B` (plus the Poisson mean) for Lévy kernels, the OU drift, and
    /// the factor rows for products. Defined for every spec.
    pub fn center_form(&self) -> Vec<LinearRow<T>> {
        let delta_row = |component: usize| LinearRow {
            terms: (0..self.frontier.len()).map(|i| (i, component, self.frontier.weight(i))).collect(),
            constant: T::zero(),
        };
        match &self.body {
            Body::Point => (0..self.dim).map(delta_row).collect(),
            Body::Levy { marginal, time } => {
                let mut row = delta_row(0);
                if let MarginalClass::Poisson { rate } = marginal {
                    row.constant = *rate * *time;
                }
                vec![row]
            }
            Body::Ou { coefs, .. } => vec![LinearRow {
                terms: coefs.iter().enumerate().map(|(i, c)| (i, 0, *c)).collect(),
                constant: T::zero(),
            }],
            Body::Product(plans) => plans
                .iter()
                .flat_map(|plan| {
                    plan.kernel.center_form().into_iter().map(move |row| LinearRow {
                        terms: row.terms.iter().map(|&(j, c, v)| (plan.lookup[j], c + plan.offset, v)).collect(),
                        constant: row.constant,
                    })
                })
                .collect(),
            Body::Additive(parts) => {
                let mut row = delta_row(0);
                row.constant = parts.iter().fold(T::zero(), |s, (m, t)| match m {
                    MarginalClass::Poisson { rate } => s + *rate * *t,
                    _ => s,
                });
                vec![row]
            }
        }
    }

    /// Linear-Gaussian form: `X_A[c] = row_c · vx + sqrt(var_c)·Z_c` with
    /// independent standard normals `Z_c`.
    pub fn gaussian_form(&self) -> Result<(Vec<LinearRow<T>>, Vec<T>)> {
        let vars: Vec<T> = match &self.body {
            Body::Point => vec![T::zero(); self.dim],
            Body::Levy { marginal, time } => match marginal {
                MarginalClass::Gaussian { variance_rate } => vec![*variance_rate * *time],
                other => return Err(Error::NonGaussian(format!("{other:?}"))),
            },
            Body::Ou { alpha, sigma_c, .. } => {
                if *alpha != T::lit(2.0) {
                    return Err(Error::NonGaussian(format!("stable OU with alpha {alpha}")));
                }
                vec![*sigma_c * *sigma_c]
            }
            Body::Product(plans) => {
                let mut v = Vec::with_capacity(self.dim);
                for plan in plans {
                    v.extend(plan.kernel.gaussian_form()?.1);
                }
                v
            }
            Body::Additive(parts) => {
                if let Some((m, _)) = parts.iter().find(|(m, _)| !m.is_gaussian()) {
                    return Err(Error::NonGaussian(format!("{m:?}")));
                }
                vec![parts.iter().fold(T::zero(), |s, (m, t)| s + gaussian_rate(m) * *t)]
            }
        };
        Ok((self.center_form(), vars))
    }
}

fn gaussian_rate<T: Scalar>(m: &MarginalClass<T>) -> T {
    match m {
        MarginalClass::Gaussian { variance_rate } => *variance_rate,
        _ => T::nan(),
    }
}

/// `μ^{t}` shifted by `shift`.
pub fn marginal_at<T: Scalar>(m: &MarginalClass<T>, t: T, shift: T) -> CondDist<T> {
    if t == T::zero() {
        return CondDist::PointMass(shift);
    }
    match *m {
        MarginalClass::Gaussian { variance_rate } => CondDist::Gaussian { mean: shift, var: variance_rate * t },
        MarginalClass::Poisson { rate } => CondDist::ShiftedPoisson { shift, mean: rate * t },
        MarginalClass::Stable { alpha, scale_rate } => CondDist::ShiftedStable {
            alpha,
            scale: scale_rate * t.powf(T::one() / alpha),
            shift,
        },
    }
}

/// The factor increment `C_i = A_i \ ∪_j A_{i,j}` of a product increment.
pub fn factor_increment<T: Scalar>(family: &IndexFamily<T>, inc: &Increment<T>, i: usize) -> Result<Increment<T>> {
    let fams = family
        .factors()
        .ok_or_else(|| Error::KindMismatch("factor increments need a product family".into()))?;
    let comp = |s: &IndexSet<T>| -> Result<IndexSet<T>> {
        match s {
            IndexSet::Prod(cs) if cs.len() == fams.len() => Ok(cs[i].clone()),
            _ => Err(Error::KindMismatch(format!("{s} is not a product set"))),
        }
    };
    let outer = comp(inc.outer())?;
    let parts = inc.parts().iter().map(comp).collect::<Result<Vec<_>>>()?;
    Increment::new(&fams[i], outer, parts)
}

fn factor_lookup<T: Scalar>(product: &Frontier<T>, factor: &Frontier<T>, i: usize) -> Result<Vec<usize>> {
    factor
        .sets()
        .iter()
        .map(|s| {
            product
                .sets()
                .iter()
                .position(|p| matches!(p, IndexSet::Prod(cs) if cs[i] == *s))
                .ok_or_else(|| Error::Inconsistent(format!("factor frontier set {s} has no product counterpart")))
        })
        .collect()
}

fn ou_sigma_from<T: Scalar>(
    alpha: T,
    lambda: T,
    sigma: T,
    family: &IndexFamily<T>,
    frontier: &Frontier<T>,
    inc: &Increment<T>,
) -> Result<T> {
    if inc.is_empty() {
        return Ok(T::zero());
    }
    let al = alpha * lambda;
    let m_a = family.set_measure(inc.outer());
    let sum = frontier
        .sets()
        .iter()
        .enumerate()
        .fold(T::zero(), |s, (i, u)| s + frontier.weight(i) * (-al * (m_a - family.set_measure(u))).exp());
    let power = sigma.powf(alpha) / al * (T::one() - sum);
    if power < -T::lit(1e-10) {
        return Err(Error::NegativeSigma { value: power.as_f64(), context: inc.label() });
    }
    Ok(power.max(T::zero()).powf(T::one() / alpha))
}

/// `σ_C` of an OU kernel on `inc`.
pub fn ou_sigma<T: Scalar>(spec: &KernelSpec<T>, family: &IndexFamily<T>, inc: &Increment<T>) -> Result<T> {
    match spec {
        KernelSpec::Ou { alpha, lambda, sigma } => {
            let frontier = Frontier::new(family, inc)?;
            ou_sigma_from(*alpha, *lambda, *sigma, family, &frontier, inc)
        }
        _ => Err(Error::InvalidParameter("ou_sigma needs an OU kernel".into())),
    }
}

/// Conditional law of `X_A` for `inc` given frontier values `vx`.
pub fn kernel_apply<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    vx: &[&[T]],
) -> Result<CondDist<T>> {
    PreparedKernel::new(spec, family, inc)?.apply(vx)
}

/// Scalar convenience over [`kernel_apply`].
pub fn kernel_apply_scalar<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    vx: &[T],
) -> Result<CondDist<T>> {
    let slices: Vec<&[T]> = vx.iter().map(std::slice::from_ref).collect();
    kernel_apply(spec, family, inc, &slices)
}

/// Transition density at `y` for kernels with Gaussian conditionals.
pub fn transition_density<T: Scalar>(
    spec: &KernelSpec<T>,
    family: &IndexFamily<T>,
    inc: &Increment<T>,
    vx: &[&[T]],
    y: &[T],
) -> Result<T> {
    if !spec.is_gaussian() {
        return Err(Error::DensityUnavailable(format!("{spec:?}")));
    }
    kernel_apply(spec, family, inc, vx)?.density(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(c: &[f64]) -> IndexSet<f64> {
        IndexSet::rect_f64(c)
    }

    #[test]
    fn empty_increment_is_point_mass() {
        let f = IndexFamily::rect(2);
        for spec in [KernelSpec::brownian(), KernelSpec::gaussian_ou(1.0, 2f64.sqrt()), KernelSpec::Dirac] {
            let d = kernel_apply_scalar(&spec, &f, &Increment::empty(r(&[1.0, 1.0])), &[0.7]).unwrap();
            assert_eq!(d, CondDist::PointMass(0.7));
        }
    }

    #[test]
    fn brownian_staircase() {
        let f = IndexFamily::rect(2);
        let inc = Increment::new(&f, r(&[2.0, 2.0]), vec![r(&[2.0, 1.0]), r(&[1.0, 2.0])]).unwrap();
        let d = kernel_apply_scalar(&KernelSpec::brownian(), &f, &inc, &[2.0, 3.0, 1.0]).unwrap();
        assert_eq!(d, CondDist::Gaussian { mean: 4.0, var: 1.0 });
    }

    #[test]
    fn gaussian_ou_simple_increment() {
        let f = IndexFamily::rect(1);
        let inc = Increment::simple(&f, r(&[1.0])).unwrap();
        let spec = KernelSpec::gaussian_ou(1.0, 2f64.sqrt());
        let x0 = 0.8;
        match kernel_apply_scalar(&spec, &f, &inc, &[x0]).unwrap() {
            CondDist::Gaussian { mean, var } => {
                assert!((mean - x0 * (-1f64).exp()).abs() < 1e-15);
                assert!((var - (1.0 - (-2f64).exp())).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bi_brownian_density_at_origin() {
        let f = IndexFamily::product(vec![IndexFamily::rect(1), IndexFamily::rect(1)]).unwrap();
        let spec = KernelSpec::Product { factors: vec![KernelSpec::brownian(), KernelSpec::brownian()] };
        let a = IndexSet::Prod(vec![r(&[1.0]), r(&[1.0])]);
        let inc = Increment::simple(&f, a).unwrap();
        let zero = [0.0, 0.0];
        let p = transition_density(&spec, &f, &inc, &[&zero], &[0.0, 0.0]).unwrap();
        assert!((p - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn stable_has_no_density() {
        let f = IndexFamily::rect(1);
        let spec = KernelSpec::Levy { marginal: MarginalClass::Stable { alpha: 1.5, scale_rate: 1.0 } };
        let inc = Increment::simple(&f, r(&[1.0])).unwrap();
        assert!(matches!(
            transition_density(&spec, &f, &inc, &[&[0.0]], &[0.0]),
            Err(Error::DensityUnavailable(_))
        ));
    }
}
