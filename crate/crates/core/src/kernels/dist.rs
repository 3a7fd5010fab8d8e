use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Conditional law of `X_A` given the frontier values.
#[derive(Clone, Debug, PartialEq)]
pub enum CondDist<T> {
    PointMass(T),
    Gaussian { mean: T, var: T },
    /// `shift + Poisson(mean)`.
    ShiftedPoisson { shift: T, mean: T },
    /// `shift + scale·S` with `S` standard symmetric α-stable, `E e^{iθS} = e^{−|θ|^α}`.
    ShiftedStable { alpha: T, scale: T, shift: T },
    /// `shift` plus independent draws from every part.
    Convolution { shift: T, parts: Vec<CondDist<T>> },
    /// Vector state: one independent law per component.
    Independent(Vec<CondDist<T>>),
}

impl<T: Scalar> CondDist<T> {
    /// Number of state components.
    pub fn dim(&self) -> usize {
        match self {
            CondDist::Independent(cs) => cs.iter().map(CondDist::dim).sum(),
            _ => 1,
        }
    }

    /// Appends one draw (all components) to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<T>) {
        match self {
            CondDist::Independent(cs) => cs.iter().for_each(|c| c.sample_into(rng, out)),
            _ => out.push(self.sample_scalar(rng)),
        }
    }

    /// Draws a scalar; vector laws return their first component.
    pub fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            CondDist::PointMass(v) => *v,
            CondDist::Gaussian { mean, var } => *mean + var.max(T::zero()).sqrt() * T::sample_standard_normal(rng),
            CondDist::ShiftedPoisson { shift, mean } => *shift + T::sample_poisson(rng, *mean),
            CondDist::ShiftedStable { alpha, scale, shift } => *shift + *scale * standard_stable(*alpha, rng),
            CondDist::Convolution { shift, parts } => {
                parts.iter().fold(*shift, |s, p| s + p.sample_scalar(rng))
            }
            CondDist::Independent(cs) => cs[0].sample_scalar(rng),
        }
    }

    /// Mean of a scalar law, when finite.
    pub fn mean(&self) -> Option<T> {
        match self {
            CondDist::PointMass(v) => Some(*v),
            CondDist::Gaussian { mean, .. } => Some(*mean),
            CondDist::ShiftedPoisson { shift, mean } => Some(*shift + *mean),
            CondDist::ShiftedStable { alpha, scale, shift } => {
                (*alpha > T::one() || *scale == T::zero()).then_some(*shift)
            }
            CondDist::Convolution { shift, parts } => {
                parts.iter().try_fold(*shift, |s, p| p.mean().map(|m| s + m))
            }
            CondDist::Independent(_) => None,
        }
    }

    /// Variance of a scalar law, when finite.
    pub fn variance(&self) -> Option<T> {
        match self {
            CondDist::PointMass(_) => Some(T::zero()),
            CondDist::Gaussian { var, .. } => Some(*var),
            CondDist::ShiftedPoisson { mean, .. } => Some(*mean),
            CondDist::ShiftedStable { scale, .. } => (*scale == T::zero()).then_some(T::zero()),
            CondDist::Convolution { parts, .. } => {
                parts.iter().try_fold(T::zero(), |s, p| p.variance().map(|v| s + v))
            }
            CondDist::Independent(_) => None,
        }
    }

    /// Density at `y` (one entry per component); Gaussian laws and
    /// independent products of them only.
    pub fn density(&self, y: &[T]) -> Result<T> {
        if y.len() != self.dim() {
            return Err(Error::ArityMismatch { expected: self.dim(), got: y.len() });
        }
        match self {
            CondDist::Gaussian { mean, var } if *var > T::zero() => {
                let two_pi = T::lit(2.0 * std::f64::consts::PI);
                let z = y[0] - *mean;
                Ok((-(z * z) / (T::lit(2.0) * *var)).exp() / (two_pi * *var).sqrt())
            }
            CondDist::Independent(cs) => {
                let mut offset = 0;
                let mut p = T::one();
                for c in cs {
                    let d = c.dim();
                    p = p * c.density(&y[offset..offset + d])?;
                    offset += d;
                }
                Ok(p)
            }
            other => Err(Error::DensityUnavailable(format!("{other:?}"))),
        }
    }
}

/// Standard symmetric α-stable draw by the Chambers–Mallows–Stuck transform.
pub fn standard_stable<T: Scalar, R: Rng + ?Sized>(alpha: T, rng: &mut R) -> T {
    let half_pi = T::lit(std::f64::consts::FRAC_PI_2);
    let v = (T::sample_open01(rng) * T::lit(2.0) - T::one()) * half_pi;
    if alpha == T::lit(2.0) {
        // S_2 with exponent |θ|² is N(0, 2)
        return T::lit(2.0).sqrt() * T::sample_standard_normal(rng);
    }
    if (alpha - T::one()).abs() < T::epsilon() {
        return v.tan();
    }
    let w = T::sample_exp1(rng);
    let a = (alpha * v).sin() / v.cos().powf(T::one() / alpha);
    let b = (((T::one() - alpha) * v).cos() / w).powf((T::one() - alpha) / alpha);
    a * b
}
