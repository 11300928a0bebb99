//! Grid verification of the unstable cone {|v_s|_* ≤ |v_u|_*}.
//!
//! At a grid point x, with E = T·DR(x)·T⁻¹ split into blocks, a vector in
//! the cone satisfies |(Df v)_s| ≤ (c_s + e_ss + e_su)|v_u| and
//! |(Df v)_u| ≥ (m_u − e_uu − e_us)|v_u|. Off-grid points are covered by
//! adding the Lipschitz slack κ·sup‖D²R‖·(half grid diagonal) to each block.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::map::{adapted_rates, PerturbedMap, TorusMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::torus::grid::grid_point;

/// Required distance of expansion and contraction factors from 1.
pub const CONE_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnosovReport {
    pub passed: bool,
    pub grid: usize,
    /// Worst contraction on the stable cone, slack included.
    pub contraction: f64,
    /// Worst expansion on the unstable cone, slack included.
    pub expansion: f64,
    pub theta: f64,
    pub k: f64,
    /// θ of L itself in the same adapted norm.
    pub linear_theta: f64,
    pub slack: f64,
    /// Grid point where the grid values alone break the cone test.
    pub failure_point: Option<Vec<f64>>,
}

fn block_norms(e: &DMatrix<f64>, ks: usize) -> [f64; 4] {
    let d = e.nrows();
    let ku = d - ks;
    let n = |r, c, nr, nc| if nr == 0 || nc == 0 { 0.0 } else { linalg::spectral_norm(&e.view((r, c), (nr, nc)).into_owned()) };
    [n(0, 0, ks, ks), n(0, ks, ks, ku), n(ks, 0, ku, ks), n(ks, ks, ku, ku)]
}

fn default_grid(d: usize) -> usize {
    ((65_536f64).powf(1.0 / d as f64).floor() as usize).max(4)
}

/// Cone check on an Nᵈ grid (default about 2¹⁶ points). A definite failure
/// at a grid point gives `passed = false`; failure caused only by the
/// slack is `VerificationInconclusive`.
pub fn verify_anosov(f: &PerturbedMap, grid: Option<usize>) -> Result<AnosovReport> {
    let s = f.spectral();
    let d = f.dim();
    let ks = s.stable_dim();
    let n = grid.unwrap_or_else(|| default_grid(d));
    let (cs, mu, kappa) = adapted_rates(s);
    let (t, tinv) = s.adapted_frame();
    let small = f.smallness();
    let slack = kappa * small.d2r_c0 * (d as f64).sqrt() / (2.0 * n as f64);
    let linear_theta = cs.max(1.0 / mu);
    let k = std::f64::consts::SQRT_2 * kappa;

    let count = n.pow(d as u32);
    let r = f.perturbation();
    let per_point: Vec<(f64, f64)> = if r.is_empty() {
        vec![(cs, mu)]
    } else {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let x = grid_point(i, n, d);
                let (_, dr) = r.eval_with_jacobian(&x);
                let e = &t * dr * &tinv;
                let [ess, esu, eus, euu] = block_norms(&e, ks);
                (cs + ess + esu, mu - euu - eus)
            })
            .collect()
    };
    let ok = |c: f64, u: f64| c <= u && c < 1.0 - CONE_MARGIN && u > 1.0 + CONE_MARGIN;
    let failure_point = per_point.iter().position(|&(c, u)| !ok(c, u)).map(|i| grid_point(i, n, d));
    let worst_c = per_point.iter().map(|p| p.0).fold(0.0, f64::max);
    let worst_u = per_point.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (contraction, expansion) = (worst_c + 2.0 * slack, worst_u - 2.0 * slack);
    let passed = failure_point.is_none();
    if passed && !ok(contraction, expansion) {
        return Err(Error::VerificationInconclusive(format!(
            "grid {n}^{d} passes but slack {slack:.3e} breaks the margin; refine the grid"
        )));
    }
    Ok(AnosovReport {
        passed,
        grid: n,
        contraction,
        expansion,
        theta: contraction.max(1.0 / expansion),
        k,
        linear_theta,
        slack,
        failure_point,
    })
}
