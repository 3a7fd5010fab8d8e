//! Set-indexed increment-Markov processes.
//!
//! Indexing collections (rectangles, tree branches, products), the
//! transition systems defined on their increments, a finite-dimensional
//! sampler built on semilattice left-neighbourhoods, and exact and
//! statistical checks of the Markov properties.

pub mod error;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod report;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{CondDist, KernelSpec, MarginalClass, PreparedKernel};
pub use lattice::{Frontier, Increment, IndexFamily, IndexSet, Semilattice, TieBreak, Tree};
pub use report::CheckReport;
pub use sampler::{FddPlan, FddSample, GaussianFdd, InitialLaw};
pub use scalar::Scalar;

pub type IndexSet64 = IndexSet<f64>;
pub type IndexSet32 = IndexSet<f32>;
pub type IndexFamily64 = IndexFamily<f64>;
pub type IndexFamily32 = IndexFamily<f32>;
pub type Increment64 = Increment<f64>;
pub type Increment32 = Increment<f32>;
pub type Frontier64 = Frontier<f64>;
pub type Frontier32 = Frontier<f32>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type KernelSpec32 = KernelSpec<f32>;
pub type CondDist64 = CondDist<f64>;
pub type CondDist32 = CondDist<f32>;
pub type InitialLaw64 = InitialLaw<f64>;
pub type InitialLaw32 = InitialLaw<f32>;
pub type GaussianFdd64 = GaussianFdd<f64>;
pub type GaussianFdd32 = GaussianFdd<f32>;
