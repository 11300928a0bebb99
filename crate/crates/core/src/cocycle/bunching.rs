//! Fiber bunching: sup‖A‖‖A⁻¹‖·θ^β < 1.

use serde::Serialize;

use super::spec::CocycleSpec;
use crate::anosov::{AnosovReport, TorusMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::torus::grid::grid_point;

#[derive(Clone, Debug, Serialize)]
pub struct BunchingReport {
    pub grid: usize,
    pub beta: f64,
    pub theta: f64,
    /// sup over the grid of ‖A(x)‖·‖A(x)⁻¹‖.
    pub sup_distortion: f64,
    pub margin: f64,
    pub bunched: bool,
}

/// θ is the base contraction rate from the cone test.
pub fn fiber_bunching_check(c: &CocycleSpec, beta: f64, hyperbolicity: &AnosovReport, grid: usize) -> Result<BunchingReport> {
    let d = c.base.dim();
    let mut sup: f64 = 0.0;
    for i in 0..grid.pow(d as u32) {
        let x = grid_point(i, grid, d);
        let a = c.checked_generator(&x)?;
        let s = linalg::singular_values(&a);
        let smin = *s.last().expect("nonempty");
        if smin <= 0.0 {
            return Err(Error::SingularGenerator { point: x });
        }
        sup = sup.max(s[0] / smin);
    }
    let margin = sup * hyperbolicity.theta.powf(beta);
    Ok(BunchingReport { grid, beta, theta: hyperbolicity.theta, sup_distortion: sup, margin, bunched: margin < 1.0 })
}
