//! Empirical Hölder exponents from sup-increments over dyadic scales.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NOISE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderConfig {
    /// Coarsest scale 2^{−j0}.
    pub j0: u32,
    /// Finest scale 2^{−j1}.
    pub j1: u32,
    pub pairs_per_scale: usize,
    /// Largest acceptable RMS residual of the log-log fit (natural log).
    pub max_residual: f64,
    pub seed: u64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        Self { j0: 4, j1: 16, pairs_per_scale: 10_000, max_residual: 0.15, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSample {
    pub delta: f64,
    pub sup_increment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    /// Fitted slope clipped to (0, 1].
    pub exponent: f64,
    /// Unclipped least-squares slope.
    pub slope: f64,
    pub constant: f64,
    pub residual: f64,
    pub scales: Vec<ScaleSample>,
    pub reliable: bool,
}

/// sup |f(x) − f(x + δu)| over random x and random unit directions u,
/// with the max-abs norm on values.
pub fn sup_increment<F>(f: &F, dim: usize, delta: f64, pairs: usize, seed: u64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            let mut u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            u.iter_mut().for_each(|v| *v /= norm);
            let y = x.iter().zip(&u).map(|(a, b)| a + delta * b).collect();
            (x, y)
        })
        .collect();
    pts.par_iter()
        .map(|(x, y)| {
            let (a, b) = (f(x), f(y));
            a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest difference quotient |f(x) − f(y)|/δ at scale δ.
pub fn difference_ratio<F>(f: &F, dim: usize, delta: f64, pairs: usize, seed: u64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    sup_increment(f, dim, delta, pairs, seed) / delta
}

/// Least-squares slope of log sup-increment against log δ.
pub fn estimate_holder<F>(f: &F, dim: usize, cfg: &HolderConfig) -> Result<HolderEstimate>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let scales: Vec<ScaleSample> = (cfg.j0..=cfg.j1)
        .map(|j| {
            let delta = 2f64.powi(-(j as i32));
            let s = sup_increment(f, dim, delta, cfg.pairs_per_scale, cfg.seed.wrapping_add(j as u64));
            ScaleSample { delta, sup_increment: s }
        })
        .collect();
    // Increments at roundoff level relative to the function's size carry
    // no regularity information.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf100);
    let size = (0..64)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            f(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max);
    let est = fit(scales, cfg.max_residual, NOISE_FLOOR * size);
    if est.reliable {
        Ok(est)
    } else {
        Err(Error::UnreliableFit { residual: est.residual, slope: est.slope })
    }
}

fn fit(scales: Vec<ScaleSample>, max_residual: f64, floor: f64) -> HolderEstimate {
    let usable: Vec<(f64, f64)> = scales
        .iter()
        .filter(|s| s.sup_increment > floor)
        .map(|s| (s.delta.ln(), s.sup_increment.ln()))
        .collect();
    if usable.len() < 2 {
        // Constant function: Lipschitz with constant zero.
        return HolderEstimate { exponent: 1.0, slope: f64::INFINITY, constant: 0.0, residual: 0.0, scales, reliable: true };
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    HolderEstimate {
        exponent: slope.clamp(f64::MIN_POSITIVE, 1.0),
        slope,
        constant: intercept.exp(),
        residual,
        reliable: residual <= max_residual && slope > 0.0,
        scales,
    }
}
