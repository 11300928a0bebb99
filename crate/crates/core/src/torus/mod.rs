//! Periodic vector-valued functions on 𝕋ᵈ: Fourier series, grids, norms and
//! regularity estimators.

pub mod grid;
pub mod holder;
pub mod sobolev;
pub mod trigpoly;

pub use grid::{GridFunction, Interpolation};
pub use holder::{estimate_holder, HolderConfig, HolderEstimate};
pub use sobolev::{sobolev_norm, SobolevReport};
pub use trigpoly::{Freq, TrigPoly};
