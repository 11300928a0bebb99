//! Topological conjugacy H with L∘H = H∘f, its inverse and derivative, and
//! the skew-product family with non-differentiable H.

pub mod counterexample;
pub mod inverse;
pub mod jacobian;
pub mod solver;

pub use counterexample::{build_counterexample, coboundary_phi, default_counterexample, Counterexample, Dyadic};
pub use inverse::{solve_inverse, InverseResult};
pub use jacobian::{jacobian_dh, DhReport};
pub use solver::{shadowing_h, solve_conjugacy, ConjugacyConfig, ConjugacyResult, InitialGuess, SweepRecord};
