//! Transition systems: per-increment conditional laws and their checks.

mod checks;
mod dist;
mod prepared;
mod spec;

pub use checks::{
    ck_residual, expectation, feller_modulus, feller_profile, homogeneity_gap, multiparameter_semigroup, CkReport,
    FellerConfig, FellerProfile, HomogeneityGap, SemigroupOp, CK_TEST_FUNCTIONS, GAUSS_HERMITE_NODES,
};
pub use dist::{standard_stable, CondDist};
pub use prepared::{
    factor_increment, kernel_apply, kernel_apply_scalar, marginal_at, ou_sigma, transition_density, LinearRow,
    PreparedKernel,
};
pub use spec::{KernelSpec, MarginalClass};
