//! The skew-product family f(x, y) = (Ax + φ(y)v, By) over L = A ⊕ B with
//! conjugacy H(x, y) = (x + ψ(y)v, y), where φ(y) + ψ(By) = λψ(y) and
//! ψ = λ⁻¹ Σ_{k≥0} λ^{−k} φ(Bᵏy).
//!
//! Points y are rounded once to the dyadic grid 2⁻⁵³ℤ² so that Bᵏy mod 1
//! is exact in wrapping u64 arithmetic; the identity then telescopes up to
//! the truncated tail and float summation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::anosov::{PerturbedMap, TorusMap};
use crate::error::{Error, Result};
use crate::spectral::{lyapunov_splitting, IntegerAutomorphism};
use crate::torus::holder::difference_ratio;
use crate::torus::{estimate_holder, GridFunction, HolderConfig, HolderEstimate, TrigPoly};

const BITS: u32 = 53;
const MASK: u64 = (1 << BITS) - 1;
const SCALE: f64 = (1u64 << BITS) as f64;

/// A point of 𝕋² on the grid 2⁻⁵³ℤ².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dyadic([u64; 2]);

impl Dyadic {
    pub fn from_f64(y: &[f64]) -> Self {
        let c = |t: f64| ((t.rem_euclid(1.0) * SCALE).round() as u64) & MASK;
        Self([c(y[0]), c(y[1])])
    }

    pub fn to_f64(self) -> [f64; 2] {
        [self.0[0] as f64 / SCALE, self.0[1] as f64 / SCALE]
    }

    /// By mod 1, exact.
    pub fn apply(self, b: &[[i64; 2]; 2]) -> Self {
        let row = |r: &[i64; 2]| {
            (r[0] as u64).wrapping_mul(self.0[0]).wrapping_add((r[1] as u64).wrapping_mul(self.0[1])) & MASK
        };
        Self([row(&b[0]), row(&b[1])])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    #[serde(skip)]
    pub map: PerturbedMap,
    pub a: [[i64; 2]; 2],
    pub b: [[i64; 2]; 2],
    /// Expanding eigenvalue of A (signed).
    pub lambda: f64,
    /// Expanding eigenvalue modulus of B.
    pub mu: f64,
    pub v: [f64; 2],
    pub phi: TrigPoly,
    pub terms: usize,
    /// |λ|^{−K}‖φ‖_{C⁰}/(|λ| − 1).
    pub tail_bound: f64,
}

fn two_by_two(m: &IntegerAutomorphism) -> Result<[[i64; 2]; 2]> {
    let r = m.to_i64().filter(|r| r.len() == 2).ok_or_else(|| Error::InvalidInput("expected a 2x2 matrix".into()))?;
    Ok([[r[0][0], r[0][1]], [r[1][0], r[1][1]]])
}

/// Leading real eigenvalue and unit eigenvector of a hyperbolic 2×2 matrix.
fn expanding_pair(m: &IntegerAutomorphism) -> Result<(f64, [f64; 2])> {
    let s = lyapunov_splitting(m)?;
    let u = s.unstable.column(0);
    let w = &s.linear * u;
    let lam = w.dot(&u);
    let sign = if u[0] < 0.0 || (u[0] == 0.0 && u[1] < 0.0) { -1.0 } else { 1.0 };
    Ok((lam, [sign * u[0], sign * u[1]]))
}

pub fn build_counterexample(
    a: &IntegerAutomorphism,
    b: &IntegerAutomorphism,
    phi: &TrigPoly,
    terms: usize,
) -> Result<Counterexample> {
    if phi.dim() != 2 || phi.range() != 1 {
        return Err(Error::InvalidInput("φ must be a scalar function on 𝕋²".into()));
    }
    let (ai, bi) = (two_by_two(a)?, two_by_two(b)?);
    let (lambda, v) = expanding_pair(a)?;
    let (mu, _) = expanding_pair(b)?;
    if !(mu.abs() > lambda.abs() && lambda.abs() > 1.0) {
        return Err(Error::OrderViolation { lambda: lambda.abs(), mu: mu.abs() });
    }
    let mut r = TrigPoly::zero(4, 4);
    for (n, c) in phi.iter() {
        let z = c[0];
        r.add_mode(vec![0, 0, n[0], n[1]], vec![z * v[0], z * v[1], Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]);
    }
    let map = PerturbedMap::build(a.block_diag(b), r)?;
    let tail_bound = lambda.abs().powi(-(terms as i32)) * phi.c0_upper() / (lambda.abs() - 1.0);
    Ok(Counterexample { map, a: ai, b: bi, lambda, mu: mu.abs(), v, phi: phi.clone(), terms, tail_bound })
}

/// φ = λψ − ψ∘B for a chosen trigonometric ψ, so that the series returns ψ.
pub fn coboundary_phi(a: &IntegerAutomorphism, b: &IntegerAutomorphism, psi: &TrigPoly) -> Result<TrigPoly> {
    let (lambda, _) = expanding_pair(a)?;
    Ok(psi.scale(lambda).sub(&psi.compose_affine(b, &[0.0, 0.0])).prune(0.0))
}

impl Counterexample {
    pub fn psi_dyadic(&self, y: Dyadic) -> f64 {
        let mut acc = 0.0;
        let mut w = 1.0 / self.lambda;
        let mut p = y;
        for _ in 0..self.terms {
            acc += w * self.phi.eval(&p.to_f64())[0];
            w /= self.lambda;
            p = p.apply(&self.b);
        }
        acc
    }

    pub fn psi(&self, y: &[f64]) -> f64 {
        self.psi_dyadic(Dyadic::from_f64(y))
    }

    /// φ(y) + ψ(By) − λψ(y).
    pub fn cohomological_residual(&self, y: &[f64]) -> f64 {
        let p = Dyadic::from_f64(y);
        self.phi.eval(&p.to_f64())[0] + self.psi_dyadic(p.apply(&self.b)) - self.lambda * self.psi_dyadic(p)
    }

    /// H(x, y) = (x + ψ(y)v, y) on the lift.
    pub fn conj(&self, p: &[f64]) -> Vec<f64> {
        let s = self.psi(&p[2..]);
        vec![p[0] + s * self.v[0], p[1] + s * self.v[1], p[2], p[3]]
    }

    /// H⁻¹(x, y) = (x − ψ(y)v, y).
    pub fn conj_inverse(&self, p: &[f64]) -> Vec<f64> {
        let s = self.psi(&p[2..]);
        vec![p[0] - s * self.v[0], p[1] - s * self.v[1], p[2], p[3]]
    }

    /// |L·H(p) − H(f p)| reduced mod ℤ⁴, with f evaluated in floating point.
    pub fn conjugacy_residual(&self, p: &[f64]) -> f64 {
        let lhp = self.map.linear_f64() * nalgebra::DVector::from_column_slice(&self.conj(p));
        let hfp = self.conj(&self.map.apply(p));
        lhp.iter().zip(&hfp).map(|(a, b)| (a - b) - (a - b).round()).fold(0.0, |m, v: f64| m.max(v.abs()))
    }

    pub fn holder(&self, cfg: &HolderConfig) -> Result<HolderEstimate> {
        estimate_holder(&|y: &[f64]| vec![self.psi(y)], 2, cfg)
    }

    /// Predicted exponent log|λ|/log μ.
    pub fn predicted_exponent(&self) -> f64 {
        self.lambda.abs().ln() / self.mu.ln()
    }

    /// sup |ψ(y) − ψ(y + δu)|/δ over random pairs.
    pub fn difference_ratio(&self, delta: f64, pairs: usize, seed: u64) -> f64 {
        difference_ratio(&|y: &[f64]| vec![self.psi(y)], 2, delta, pairs, seed)
    }

    /// Worst cohomological and conjugacy residuals over `samples` random points.
    pub fn residuals(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 4]> = (0..samples).map(|_| [rng.gen(), rng.gen(), rng.gen(), rng.gen()]).collect();
        pts.par_iter()
            .map(|p| (self.cohomological_residual(&p[2..]).abs(), self.conjugacy_residual(p)))
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
    }

    /// ψ sampled on the n×n grid of 𝕋² (exact dyadic points for n a power of 2).
    pub fn psi_grid(&self, n: usize) -> GridFunction {
        GridFunction::from_fn(2, 1, n, |y| vec![self.psi(y)])
    }

    /// Derivative equation for DH = [[I, v⊗Dψ], [0, I]] on the y-grid:
    /// max |λDψ(y) − Dφ(y) − Dψ(By)·B| with Dψ by Fourier differentiation.
    /// B maps grid points to grid points, so Dψ(By) is a grid lookup.
    pub fn derivative_residual(&self, n: usize) -> f64 {
        let psi = self.psi_grid(n).to_trigpoly();
        let d: Vec<GridFunction> = (0..2).map(|j| GridFunction::sample(&psi.partial(j), n)).collect();
        let dphi: Vec<TrigPoly> = (0..2).map(|j| self.phi.partial(j)).collect();
        let b = self.b;
        (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i0, i1) = (k / n, k % n);
                let y = [i0 as f64 / n as f64, i1 as f64 / n as f64];
                let by = [
                    (b[0][0] * i0 as i64 + b[0][1] * i1 as i64).rem_euclid(n as i64) as usize,
                    (b[1][0] * i0 as i64 + b[1][1] * i1 as i64).rem_euclid(n as i64) as usize,
                ];
                let kb = by[0] * n + by[1];
                (0..2)
                    .map(|j| {
                        let chain: f64 = (0..2).map(|i| d[i].value(kb)[0] * b[i][j] as f64).sum();
                        (self.lambda * d[j].value(k)[0] - dphi[j].eval(&y)[0] - chain).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Default example: A = [[2,1],[1,1]], B = [[3,1],[2,1]], φ = ε sin(2πy₁).
pub fn default_counterexample(eps: f64, terms: usize) -> Result<Counterexample> {
    let a = IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]])?;
    let b = IntegerAutomorphism::from_rows(&[vec![3, 1], vec![2, 1]])?;
    let phi = TrigPoly::sin_mode(2, 1, 0, &[1, 0], eps);
    build_counterexample(&a, &b, &phi, terms)
}

/// The value ε sin(2πy₁) used by the default example.
pub fn default_phi(eps: f64, y: &[f64]) -> f64 {
    eps * (TAU * y[0]).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_orbit_matches_float_for_small_iterates() {
        let b = [[3, 1], [2, 1]];
        let y = Dyadic::from_f64(&[0.25, 0.625]);
        assert_eq!(y.apply(&b).to_f64(), [0.375, 0.125]);
    }

    #[test]
    fn zero_phi_gives_identity() {
        let c = default_counterexample(0.0, 60).unwrap();
        assert_eq!(c.psi(&[0.3, 0.4]), 0.0);
        assert_eq!(c.conj(&[0.1, 0.2, 0.3, 0.4]), vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn order_violation_detected() {
        let a = IntegerAutomorphism::from_rows(&[vec![3, 1], vec![2, 1]]).unwrap();
        let b = IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        let phi = TrigPoly::sin_mode(2, 1, 0, &[1, 0], 0.01);
        assert!(matches!(build_counterexample(&a, &b, &phi, 60), Err(Error::OrderViolation { .. })));
    }

    #[test]
    fn identity_and_skew_inverse() {
        let c = default_counterexample(0.01, 60).unwrap();
        let (coh, conj) = c.residuals(2000, 1);
        assert!(coh < 1e-12 && conj < 1e-10, "{coh} {conj}");
        let p = [0.3, 0.7, 0.125, 0.8];
        let q = c.conj_inverse(&c.conj(&p));
        assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn smooth_psi_is_recovered() {
        let a = IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        let b = IntegerAutomorphism::from_rows(&[vec![3, 1], vec![2, 1]]).unwrap();
        let psi = TrigPoly::cos_mode(2, 1, 0, &[1, -1], 0.02);
        let phi = coboundary_phi(&a, &b, &psi).unwrap();
        let c = build_counterexample(&a, &b, &phi, 60).unwrap();
        for y in [[0.1, 0.2], [0.7, 0.45]] {
            assert!((c.psi(&y) - psi.eval(&y)[0]).abs() < 1e-14);
        }
        assert!(c.derivative_residual(32) < 1e-8);
    }
}
