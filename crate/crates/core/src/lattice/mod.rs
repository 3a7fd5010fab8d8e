//! Indexing collections and the combinatorics attached to increments.

mod frontier;
mod increment;
mod semilattice;
mod set;

pub use frontier::{sort_by_distance, Frontier};
pub use increment::{
    extremal_representation, incl_excl_coefficients, measure, shape_check, split, union_measure, Increment,
    MAX_PARTS,
};
pub use semilattice::{Semilattice, TieBreak, DEFAULT_CLOSURE_CAP};
pub use set::{FamilyKind, IndexFamily, IndexSet, Measure, Tree};
