//! Discrete orthogonal polynomials built from moment functionals, and exact
//! verification of Δ-coherent pairs of the second kind.

pub mod coherence;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod functionals;
pub mod identify;
pub mod linalg;
pub mod mops;
pub mod poly;
pub mod report;
pub mod scalar;
pub mod sobolev;
pub mod weights;

pub use error::{Error, Result};
