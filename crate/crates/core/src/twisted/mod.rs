//! The linearized twisted equation over L and one KAM-style improvement.

mod kam;
mod linearized;
mod orbits;

pub use kam::{kam_iterate, kam_step, KamConfig, KamStepReport, Orientation};
pub use linearized::{solve_linearized, substitution_residual, LinearizedConfig, LinearizedSolution};
pub use orbits::{ball, DualOrbitDecomposition, OrbitSegment};
