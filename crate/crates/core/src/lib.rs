//! Computer algebra for finite DG categories and their twisted complexes.
//!
//! Every decision (homotopy, isomorphism, cohomology, spectral sequence
//! pages) is made by exact integer linear algebra.

pub mod dgcat;
pub mod gen;
pub mod intlin;
pub mod quotient;
pub mod realize;
pub mod twisted;

pub use intlin::{FGAbComplex, FGAbGroup, Int, IntMatrix, Lattice, Rat, Subquotient};
