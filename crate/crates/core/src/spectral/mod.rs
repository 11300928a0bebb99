//! Exact integer linear algebra and certified spectral data of toral
//! automorphisms.

pub mod automorphism;
pub mod classify;
pub mod factor;
pub mod modp;
pub mod poly;
pub mod roots;
pub mod splitting;

pub use automorphism::IntegerAutomorphism;
pub use classify::{analyze, classify, ClassificationFlags, ClassificationReport, SpectralAnalysis};
pub use factor::{factor_over_q, Factor};
pub use poly::IntPoly;
pub use roots::{certified_roots, CertifiedRoot};
pub use splitting::{lyapunov_splitting, SpectralData};
