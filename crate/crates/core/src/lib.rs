//! Hyperbolic toral automorphisms, their perturbations, conjugacies and
//! cocycle diagnostics.

pub mod anosov;
pub mod cocycle;
pub mod conjugacy;
pub mod error;
pub mod linalg;
pub mod spectral;
pub mod torus;
pub mod twisted;

pub use error::{Error, Result};
