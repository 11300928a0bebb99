//! Linear cocycles over a torus map: products, exponents, Oseledets
//! subspaces, conformality and bunching diagnostics.

mod bunching;
mod conformal;
mod dh;
mod exponents;
mod oseledets;
mod spec;

pub use bunching::{fiber_bunching_check, BunchingReport};
pub use conformal::{conformality_check, conformality_of, Conformality, ConformalityReport, DECIDE_TOL, SEPARATE_TOL};
pub use dh::{dh_as_cocycle_conjugacy, residuals_converge, DhCocycleReport};
pub use exponents::{
    exponents_at_periodic, lyapunov_qr, lyapunov_volume, ExponentReport, PeriodicExponentReport, QrConfig, VolumeExponentReport,
};
pub use oseledets::{oseledets_subbundle, OseledetsEstimate};
pub use spec::{cocycle_product, ordered_subspaces, product_rule_defect, CocycleSpec, Generator};
