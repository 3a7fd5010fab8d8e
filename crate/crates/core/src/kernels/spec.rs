use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{FamilyKind, IndexFamily};
use crate::scalar::Scalar;

/// Infinitely divisible law `μ` of a Lévy kernel; the kernel uses `μ^{m(C)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum MarginalClass<T> {
    /// `N(0, variance_rate·t)`.
    Gaussian { variance_rate: T },
    /// `Poisson(rate·t)`.
    Poisson { rate: T },
    /// Symmetric α-stable with scale `scale_rate·t^{1/α}`.
    Stable { alpha: T, scale_rate: T },
}

impl<T: Scalar> MarginalClass<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite and > 0")))
            }
        };
        match *self {
            MarginalClass::Gaussian { variance_rate } => positive("variance rate", variance_rate),
            MarginalClass::Poisson { rate } => positive("Poisson rate", rate),
            MarginalClass::Stable { alpha, scale_rate } => {
                if !(alpha > T::zero() && alpha < T::lit(2.0)) {
                    return Err(Error::InvalidParameter("stable alpha must lie in (0, 2)".into()));
                }
                positive("stable scale rate", scale_rate)
            }
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, MarginalClass::Gaussian { .. })
    }
}

/// A transition system on the increments of a family. The measure `m`
/// always comes from the family the kernel is applied on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec<T> {
    /// `P_C(x; ·) = δ_{Δx_B}`.
    Dirac,
    Levy { marginal: MarginalClass<T> },
    /// Ornstein–Uhlenbeck kernel; `alpha = 2` is the Gaussian case.
    Ou { alpha: T, lambda: T, sigma: T },
    /// One kernel per factor of a product family; vector state.
    Product { factors: Vec<KernelSpec<T>> },
    /// Sum of independent Lévy processes, one per factor of a product family.
    AdditiveLevy { factors: Vec<MarginalClass<T>> },
}

impl<T: Scalar> KernelSpec<T> {
    pub fn brownian() -> Self {
        KernelSpec::Levy { marginal: MarginalClass::Gaussian { variance_rate: T::one() } }
    }

    pub fn gaussian_ou(lambda: T, sigma: T) -> Self {
        KernelSpec::Ou { alpha: T::lit(2.0), lambda, sigma }
    }

    /// Number of state components.
    pub fn state_dim(&self) -> usize {
        match self {
            KernelSpec::Product { factors } => factors.iter().map(KernelSpec::state_dim).sum(),
            _ => 1,
        }
    }

    /// Whether every conditional law is Gaussian (or a point mass).
    pub fn is_gaussian(&self) -> bool {
        match self {
            KernelSpec::Dirac => true,
            KernelSpec::Levy { marginal } => marginal.is_gaussian(),
            KernelSpec::Ou { alpha, .. } => *alpha == T::lit(2.0),
            KernelSpec::Product { factors } => factors.iter().all(KernelSpec::is_gaussian),
            KernelSpec::AdditiveLevy { factors } => factors.iter().all(MarginalClass::is_gaussian),
        }
    }

    /// Checks parameters and arity against `family`.
    pub fn validate(&self, family: &IndexFamily<T>) -> Result<()> {
        match self {
            KernelSpec::Dirac => Ok(()),
            KernelSpec::Levy { marginal } => marginal.validate(),
            KernelSpec::Ou { alpha, lambda, sigma } => {
                if !(*alpha > T::zero() && *alpha <= T::lit(2.0)) {
                    return Err(Error::InvalidParameter("OU alpha must lie in (0, 2]".into()));
                }
                if !(*lambda > T::zero() && lambda.is_finite()) {
                    return Err(Error::InvalidParameter("OU lambda must be > 0".into()));
                }
                if !(*sigma > T::zero() && sigma.is_finite()) {
                    return Err(Error::InvalidParameter("OU sigma must be > 0".into()));
                }
                Ok(())
            }
            KernelSpec::Product { factors } => {
                let fams = product_factors(family, factors.len())?;
                factors.iter().zip(fams).try_for_each(|(k, f)| k.validate(f))
            }
            KernelSpec::AdditiveLevy { factors } => {
                product_factors(family, factors.len())?;
                factors.iter().try_for_each(MarginalClass::validate)
            }
        }
    }
}

pub(crate) fn product_factors<T: Scalar>(family: &IndexFamily<T>, arity: usize) -> Result<&[IndexFamily<T>]> {
    match family.kind() {
        FamilyKind::Product(fs) if fs.len() == arity => Ok(fs),
        FamilyKind::Product(fs) => Err(Error::ArityMismatch { expected: fs.len(), got: arity }),
        _ => Err(Error::KindMismatch("product kernels need a product family".into())),
    }
}
