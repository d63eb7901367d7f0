//! Profinite semigroup toolkit: finite semigroups and pseudovarieties,
//! star-free-syntax rational languages, κ̄-terms and their factorizations,
//! rational subsets of free groups, and pointlike separation checks.

pub mod factorization;
pub mod freegroup;
pub mod kappa;
pub mod rational;
pub mod semigroup;
pub mod separation;
