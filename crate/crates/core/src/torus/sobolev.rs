//! Grid quadrature of the W^{1,q} norm. A diagnostic only: samples cannot
//! certify weak differentiability.

use serde::{Deserialize, Serialize};

use super::grid::GridFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub q: f64,
    pub value: f64,
    pub resolution: usize,
    pub diagnostic_only: bool,
}

/// (mean over the grid of |f|^q + |Df|^q)^{1/q}, with Euclidean |f| and
/// Frobenius |Df|; derivatives by Fourier differentiation.
pub fn sobolev_norm(f: &GridFunction, q: f64) -> SobolevReport {
    assert!(q >= 1.0, "q must be at least 1");
    let p = f.to_trigpoly();
    let partials: Vec<GridFunction> =
        (0..f.dim()).map(|j| GridFunction::sample(&p.partial(j), f.n())).collect();
    let count = f.len();
    let mut acc = 0.0;
    for k in 0..count {
        let v: f64 = f.value(k).iter().map(|x| x * x).sum::<f64>().sqrt();
        let dv: f64 = partials.iter().map(|g| g.value(k).iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt();
        acc += v.powf(q) + dv.powf(q);
    }
    SobolevReport { q, value: (acc / count as f64).powf(1.0 / q), resolution: f.n(), diagnostic_only: true }
}
