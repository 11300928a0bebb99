//! H⁻¹ by pointwise Newton on the lift of the interpolated H.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::solver::{centered, fourier_jacobian, ConjugacyResult};
use crate::anosov::map::newton_solve;
use crate::torus::grid::grid_point;
use crate::torus::GridFunction;

#[derive(Clone, Debug, Serialize)]
pub struct InverseResult {
    /// H⁻¹ = Id + g on the grid of h.
    pub g: GridFunction,
    /// max |H(H⁻¹(x)) − x| mod ℤᵈ over the grid.
    pub residual: f64,
    pub failures: Vec<Vec<f64>>,
}

pub fn solve_inverse(res: &ConjugacyResult) -> InverseResult {
    let h = &res.h;
    let (d, n) = (h.dim(), h.n());
    let dh = fourier_jacobian(h);
    let shift = &res.anchor.shift;
    let lift = |x: &[f64]| -> (Vec<f64>, DMatrix<f64>) {
        let v = h.eval(x);
        let j = DMatrix::from_row_slice(d, d, &dh.eval(x)) + DMatrix::identity(d, d);
        (x.iter().zip(&v).zip(shift).map(|((a, b), c)| a + b + c).collect(), j)
    };
    let solved: Vec<(Vec<f64>, Option<Vec<f64>>)> = (0..h.len())
        .into_par_iter()
        .map(|k| {
            let y = grid_point(k, n, d);
            let x0: Vec<f64> = y.iter().zip(h.value(k)).zip(shift).map(|((a, b), c)| a - b - c).collect();
            let x = newton_solve(lift, &y, x0).ok();
            (y, x)
        })
        .collect();
    let mut samples = Vec::with_capacity(h.len() * d);
    let mut failures = Vec::new();
    let mut residual: f64 = 0.0;
    for (y, x) in solved {
        match x {
            Some(x) => {
                let hx = lift(&x).0;
                let e: Vec<f64> = hx.iter().zip(&y).map(|(a, b)| a - b).collect();
                residual = residual.max(centered(&e).iter().fold(0.0, |m, v| m.max(v.abs())));
                samples.extend(x.iter().zip(&y).map(|(a, b)| a - b));
            }
            None => {
                samples.extend(std::iter::repeat_n(f64::NAN, d));
                failures.push(y);
            }
        }
    }
    InverseResult { g: GridFunction::from_samples(d, d, n, samples), residual, failures }
}
