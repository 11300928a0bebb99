//! L·DH(x) = DH(fx)·D_xf as a cohomology of the derivative cocycle with L.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::anosov::TorusMap;
use crate::torus::{estimate_holder, GridFunction, HolderConfig, HolderEstimate};

#[derive(Clone, Debug, Serialize)]
pub struct DhCocycleReport {
    pub resolution: usize,
    /// max over the grid of |L·DH(x) − DH(fx)·D_xf|.
    pub residual: f64,
    pub holder: Option<HolderEstimate>,
    pub holder_failure: Option<String>,
}

/// `dh` holds DH row-major (range d²) on a grid; DH(fx) is read from its
/// trigonometric interpolant.
pub fn dh_as_cocycle_conjugacy(dh: &GridFunction, f: &dyn TorusMap, holder: Option<&HolderConfig>) -> DhCocycleReport {
    let d = f.dim();
    let l = f.linear().to_f64();
    let n = dh.n();
    let pts: Vec<Vec<f64>> = (0..dh.len()).map(|k| dh.point(k)).collect();
    let images: Vec<Vec<f64>> = pts.iter().map(|x| f.apply(x)).collect();
    let at_image = dh.eval_many(&images);
    let residual = (0..dh.len())
        .map(|k| {
            let h = DMatrix::from_row_slice(d, d, dh.value(k));
            let hf = DMatrix::from_row_slice(d, d, &at_image[k]);
            (&l * h - hf * f.jacobian(&pts[k])).amax()
        })
        .fold(0.0, f64::max);
    let (holder, holder_failure) = match holder {
        None => (None, None),
        Some(cfg) => match estimate_holder(&|x: &[f64]| dh.eval(x), d, cfg) {
            Ok(e) => (Some(e), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    DhCocycleReport { resolution: n, residual, holder, holder_failure }
}

/// Whether (resolution, residual) pairs shrink under refinement: each
/// finer grid must at least halve the residual unless it is below `floor`.
pub fn residuals_converge(runs: &[(usize, f64)], floor: f64) -> bool {
    let mut sorted = runs.to_vec();
    sorted.sort_by_key(|r| r.0);
    sorted.windows(2).all(|w| w[1].1 <= floor || w[1].1 <= 0.5 * w[0].1)
}
