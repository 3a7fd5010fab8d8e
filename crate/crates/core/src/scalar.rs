//! Floating-point scalar abstraction shared by every module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, Poisson, StandardNormal};

/// Real scalar used for corners, measures and process values.
///
/// Implemented for `f32` and `f64`. The sampling hooks live on the trait so
/// that generic code does not need to carry `rand_distr` bounds around.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
    /// Converts an `f64` literal; panics only if the value is unrepresentable.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Uniform draw on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Poisson draw with the given mean; a zero mean yields zero.
    fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: Self) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Exp1.sample(rng)
            }

            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: Self) -> Self {
                if mean <= 0.0 {
                    return 0.0;
                }
                Poisson::new(mean)
                    .expect("positive finite Poisson mean")
                    .sample(rng)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
