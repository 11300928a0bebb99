//! DH = I + Dh by Fourier differentiation and the derivative equation
//! L·DH(x) = DH(f x)·D_xf on the solver grid.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::solver::{fourier_jacobian, ConjugacyResult};
use crate::anosov::TorusMap;
use crate::torus::GridFunction;

#[derive(Clone, Debug, Serialize)]
pub struct DhReport {
    pub resolution: usize,
    /// max over grid points of the largest entry of L·DH(x) − DH(f x)·D_xf.
    pub residual: f64,
    pub min_abs_det: f64,
    pub dh_c0: f64,
}

pub fn jacobian_dh(f: &dyn TorusMap, res: &ConjugacyResult) -> (GridFunction, DhReport) {
    let h = &res.h;
    let d = h.dim();
    let dh = fourier_jacobian(h);
    let id = DMatrix::<f64>::identity(d, d);
    let pts: Vec<Vec<f64>> = (0..h.len()).map(|k| h.point(k)).collect();
    let fwd: Vec<Vec<f64>> = pts.par_iter().map(|x| f.apply(x)).collect();
    let dh_f = dh.eval_many(&fwd);
    let l = res.linear();
    let (residual, min_abs_det) = (0..h.len())
        .into_par_iter()
        .map(|k| {
            let dhx = DMatrix::from_row_slice(d, d, dh.value(k)) + &id;
            let dhf = DMatrix::from_row_slice(d, d, &dh_f[k]) + &id;
            let e = l * &dhx - dhf * f.jacobian(&pts[k]);
            (e.amax(), dhx.determinant().abs())
        })
        .reduce(|| (0.0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)));
    let report = DhReport { resolution: h.n(), residual, min_abs_det, dh_c0: dh.max_abs() };
    (dh, report)
}
