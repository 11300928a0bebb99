//! Finite-time Lyapunov exponents by QR reorthogonalization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::spec::{cocycle_product, CocycleSpec};
use crate::anosov::{PeriodicOrbit, TorusMap};
use crate::error::{Error, Result};
use crate::linalg;

/// Deviation of QᵀQ from I that counts as lost orthogonality.
const ORTHO_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct QrConfig {
    /// Leading steps excluded from the averages while the frame aligns.
    pub transient: usize,
    /// Steps multiplied between two factorizations.
    pub reorth_every: usize,
}

impl Default for QrConfig {
    fn default() -> Self {
        Self { transient: 100, reorth_every: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub point: Vec<f64>,
    pub steps: usize,
    pub transient: usize,
    /// Decreasing.
    pub exponents: Vec<f64>,
    /// max over the second half of the window of |running average − final|.
    pub oscillation: Vec<f64>,
    /// (1/n)·log|det 𝒜| over the averaging window.
    pub log_det_rate: f64,
    pub reference: Option<Vec<f64>>,
    pub max_deviation: Option<f64>,
    pub orthogonality_defect: f64,
}

fn deviation(est: &[f64], reference: &Option<Vec<f64>>) -> Option<f64> {
    reference.as_ref().map(|r| est.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// A fixed orthogonal frame in general position: coordinate frames can lie
/// in invariant subspaces of block maps and never see the other blocks.
pub fn generic_frame(m: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f4a3e);
    DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0)).qr().q()
}

/// QR iteration along n steps of the orbit of x; the averages skip the
/// first `transient` steps.
pub fn lyapunov_qr(c: &CocycleSpec, x: &[f64], n: usize, cfg: &QrConfig) -> Result<ExponentReport> {
    if n <= cfg.transient {
        return Err(Error::InvalidInput(format!("{n} steps do not exceed the transient {}", cfg.transient)));
    }
    let m = c.size();
    let every = cfg.reorth_every.max(1);
    let mut q = generic_frame(m);
    let mut p = x.to_vec();
    let mut sums = vec![0.0; m];
    let mut log_det = 0.0;
    let mut history: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut worst_ortho: f64 = 0.0;
    let mut step = 0;
    while step < n {
        // Blocks never straddle the end of the transient.
        let mut block = every.min(n - step);
        if step < cfg.transient {
            block = block.min(cfg.transient - step);
        }
        let in_window = step >= cfg.transient;
        let mut prod = q.clone();
        let mut block_det = 0.0;
        for _ in 0..block {
            let a = c.checked_generator(&p)?;
            block_det += a.determinant().abs().ln();
            prod = a * prod;
            p = c.base.apply(&p);
            step += 1;
        }
        let qr = prod.qr();
        let (qn, r) = (qr.q(), qr.r());
        let ortho = (qn.transpose() * &qn - DMatrix::<f64>::identity(m, m)).amax();
        worst_ortho = worst_ortho.max(ortho);
        if ortho > ORTHO_TOL || !r.iter().all(|v| v.is_finite()) {
            return Err(Error::LostOrthogonality(ortho));
        }
        if in_window {
            for i in 0..m {
                sums[i] += r[(i, i)].abs().ln();
            }
            log_det += block_det;
            let done = step - cfg.transient;
            history.push((done, sums.iter().map(|s| s / done as f64).collect()));
        }
        q = qn;
    }
    let counted = n - cfg.transient;
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / counted as f64).collect();
    let oscillation: Vec<f64> = (0..m)
        .map(|i| {
            history
                .iter()
                .filter(|(k, _)| 2 * k >= counted)
                .map(|(_, avg)| (avg[i] - exponents[i]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    sort_desc(&mut exponents);
    let reference = c.reference_exponents();
    Ok(ExponentReport {
        point: x.to_vec(),
        steps: n,
        transient: cfg.transient,
        max_deviation: deviation(&exponents, &reference),
        exponents,
        oscillation,
        log_det_rate: log_det / counted as f64,
        reference,
        orthogonality_defect: worst_ortho,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeExponentReport {
    pub samples: usize,
    pub steps: usize,
    /// Average over the sample grid, decreasing.
    pub mean: Vec<f64>,
    /// Sample standard deviation per exponent.
    pub spread: Vec<f64>,
    /// One long orbit from the first sample.
    pub birkhoff: ExponentReport,
    pub reference: Option<Vec<f64>>,
    /// |mean_i − reference_i|.
    pub deviation: Option<Vec<f64>>,
}

/// Averages finite-time exponents over the shifted grid
/// {(k + offset)/N}, the offset drawn from `seed`.
pub fn lyapunov_volume(c: &CocycleSpec, grid: usize, n: usize, cfg: &QrConfig, seed: u64) -> Result<VolumeExponentReport> {
    let d = c.base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..0.9)).collect();
    let count = grid.pow(d as u32);
    let pts: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            let idx = crate::torus::grid::grid_index(i, grid, d);
            idx.iter().zip(&offset).map(|(&k, o)| (k as f64 + o) / grid as f64).collect()
        })
        .collect();
    let reports: Vec<ExponentReport> = pts.par_iter().map(|x| lyapunov_qr(c, x, n, cfg)).collect::<Result<_>>()?;
    let m = c.size();
    let mean: Vec<f64> = (0..m).map(|i| reports.iter().map(|r| r.exponents[i]).sum::<f64>() / count as f64).collect();
    let spread: Vec<f64> = (0..m)
        .map(|i| {
            let v = reports.iter().map(|r| (r.exponents[i] - mean[i]).powi(2)).sum::<f64>() / (count.max(2) - 1) as f64;
            v.sqrt()
        })
        .collect();
    let birkhoff = lyapunov_qr(c, &pts[0], n.saturating_mul(count).min(1_000_000).max(n), cfg)?;
    let reference = c.reference_exponents();
    let deviation = reference.as_ref().map(|r| mean.iter().zip(r).map(|(a, b)| (a - b).abs()).collect());
    Ok(VolumeExponentReport { samples: count, steps: n, mean, spread, birkhoff, reference, deviation })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicExponentReport {
    pub period: usize,
    pub point: Vec<f64>,
    /// log|eigenvalue|/period, decreasing.
    pub exponents: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub max_deviation: Option<f64>,
}

/// Exponents from the eigenvalue moduli of 𝒜(p, period).
pub fn exponents_at_periodic(c: &CocycleSpec, orbit: &PeriodicOrbit) -> Result<PeriodicExponentReport> {
    let n = orbit.period;
    let prod = cocycle_product(c, &orbit.point, n as i64)?;
    let mut exponents: Vec<f64> = linalg::eigenvalues(&prod).iter().map(|z| z.norm().ln() / n as f64).collect();
    sort_desc(&mut exponents);
    let reference = c.reference_exponents();
    Ok(PeriodicExponentReport {
        period: n,
        point: orbit.point.clone(),
        max_deviation: deviation(&exponents, &reference),
        exponents,
        reference,
    })
}
