//! Simultaneous (Aberth–Ehrlich) root iteration with a posteriori inclusion
//! discs.
//!
//! For a monic polynomial p of degree n with distinct approximations zᵢ, the
//! discs D(zᵢ, n·|wᵢ|), wᵢ = p(zᵢ)/∏_{j≠i}(zᵢ−zⱼ), cover all roots and every
//! connected component of k discs holds exactly k roots. Pairwise disjoint
//! discs therefore isolate the roots. |p(zᵢ)| is bounded from above by the
//! computed value plus a rounding bound for the evaluation scheme.

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::poly::IntPoly;
use crate::error::{Error, Result};

/// A root approximation and a radius guaranteed to contain exactly one root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRoot {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
}

impl CertifiedRoot {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn modulus(&self) -> f64 {
        self.value().norm()
    }
}

/// Working precision of the residual evaluation. Levels above zero evaluate
/// and polish in double-double arithmetic (about twice the f64 mantissa).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Precision(pub u8);

pub const MAX_PRECISION_LEVEL: u8 = 3;

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

// ---------------------------------------------------------------------------
// double-double arithmetic

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Clone, Copy, Debug)]
struct DdComplex {
    re: Dd,
    im: Dd,
}

impl DdComplex {
    fn from(z: Complex64) -> Self {
        Self { re: Dd::from(z.re), im: Dd::from(z.im) }
    }

    fn add(self, o: Self) -> Self {
        Self { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

// ---------------------------------------------------------------------------

/// Evaluate p(z) and p'(z); also returns an upper bound on the absolute
/// rounding error of the p(z) value.
fn eval_with_bound(coeffs: &[f64], z: Complex64, level: Precision) -> (Complex64, Complex64, f64) {
    let n = coeffs.len() - 1;
    let absz = z.norm();
    let magnitude: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * absz + c.abs());
    // gamma_k = k u / (1 - k u) with k = 4n + 2 for complex Horner.
    let k = (4 * n + 2) as f64;
    let gamma = |u: f64| k * u / (1.0 - k * u);
    let mut dp = Complex64::zero();
    if level.0 == 0 {
        let mut v = Complex64::zero();
        for &c in coeffs.iter().rev() {
            dp = dp * z + v;
            v = v * z + c;
        }
        (v, dp, gamma(UNIT_ROUNDOFF) * magnitude)
    } else {
        let zd = DdComplex::from(z);
        let mut v = DdComplex::from(Complex64::zero());
        for &c in coeffs.iter().rev() {
            dp = dp * z + v.to_c64();
            v = v.mul(zd).add(DdComplex { re: Dd::from(c), im: Dd::ZERO });
        }
        // Final rounding of the double-double value to f64 adds one ulp.
        let val = v.to_c64();
        let bound = gamma(UNIT_ROUNDOFF * UNIT_ROUNDOFF * 4.0) * magnitude + val.norm() * UNIT_ROUNDOFF;
        (val, dp, bound)
    }
}

fn initial_guesses(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    // Fujiwara-type bound on root moduli for a monic polynomial.
    let mut r: f64 = 0.0;
    for (k, c) in coeffs.iter().take(n).enumerate() {
        let e = (n - k) as f64;
        r = r.max(c.abs().powf(1.0 / e));
    }
    let r = 2.0 * r.max(1e-3);
    let offset = 0.4;
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64 + offset;
            Complex64::from_polar(r * 0.5, t)
        })
        .collect()
}

fn aberth(coeffs: &[f64], max_iter: usize) -> (Vec<Complex64>, bool) {
    let n = coeffs.len() - 1;
    let mut z = initial_guesses(coeffs);
    let mut converged = false;
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (p, dp, _) = eval_with_bound(coeffs, z[i], Precision(0));
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::zero();
            for j in 0..n {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    (z, converged)
}

/// Inclusion radii for the approximations `z`.
fn inclusion_radii(coeffs: &[f64], z: &[Complex64], level: Precision) -> Vec<f64> {
    let n = z.len();
    (0..n)
        .map(|i| {
            let (p, _, err) = eval_with_bound(coeffs, z[i], level);
            let mut denom = 1.0;
            for j in 0..n {
                if j != i {
                    denom *= (z[i] - z[j]).norm();
                }
            }
            let r = n as f64 * (p.norm() + err) / denom;
            // Outward rounding slack for the radius computation itself.
            r * (1.0 + 8.0 * n as f64 * UNIT_ROUNDOFF) + f64::MIN_POSITIVE
        })
        .collect()
}

fn discs_disjoint(z: &[Complex64], r: &[f64]) -> bool {
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if (z[i] - z[j]).norm() <= r[i] + r[j] {
                return false;
            }
        }
    }
    true
}

/// Newton polishing with residuals evaluated at the given precision.
fn polish(coeffs: &[f64], z: &mut [Complex64], level: Precision, steps: usize) {
    for zi in z.iter_mut() {
        for _ in 0..steps {
            let (p, dp, _) = eval_with_bound(coeffs, *zi, level);
            let step = p / dp;
            if !step.is_finite() || step.norm() == 0.0 {
                break;
            }
            *zi -= step;
        }
    }
}

/// Roots of a squarefree monic (up to sign) integer polynomial with
/// isolating inclusion discs.
///
/// Starts at precision level 0 and escalates up to [`MAX_PRECISION_LEVEL`]
/// when the discs fail to separate.
pub fn certified_roots(p: &IntPoly) -> Result<Vec<CertifiedRoot>> {
    certified_roots_from(p, Precision(0))
}

pub fn certified_roots_from(p: &IntPoly, start: Precision) -> Result<Vec<CertifiedRoot>> {
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    let lead = p.leading();
    if lead.magnitude() != &num_bigint::BigUint::from(1u32) {
        return Err(Error::InvalidInput(format!("{p} is not monic up to sign")));
    }
    let mut coeffs = p.to_f64();
    if coeffs[coeffs.len() - 1] < 0.0 {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("coefficients overflow f64".into()));
    }
    let n = p.degree();
    if n == 1 {
        return Ok(vec![CertifiedRoot { re: -coeffs[0], im: 0.0, radius: coeffs[0].abs() * UNIT_ROUNDOFF }]);
    }
    let (mut z, _) = aberth(&coeffs, 2000);
    let mut last_residual = f64::INFINITY;
    for level in start.0..=MAX_PRECISION_LEVEL {
        let lv = Precision(level);
        polish(&coeffs, &mut z, lv, 3 + 2 * level as usize);
        let r = inclusion_radii(&coeffs, &z, lv);
        last_residual = r.iter().cloned().fold(0.0, f64::max);
        if discs_disjoint(&z, &r) && r.iter().all(|x| x.is_finite()) {
            let mut out: Vec<CertifiedRoot> = z
                .iter()
                .zip(&r)
                .map(|(zi, &ri)| {
                    // Snap numerically real roots of a real polynomial onto the
                    // axis when the disc straddles it; conjugate symmetry and
                    // disjointness imply the enclosed root is real.
                    let im = if zi.im.abs() <= ri { 0.0 } else { zi.im };
                    CertifiedRoot { re: zi.re, im, radius: ri }
                })
                .collect();
            out.sort_by(|a, b| {
                a.modulus()
                    .total_cmp(&b.modulus())
                    .then(a.re.total_cmp(&b.re))
                    .then(a.im.total_cmp(&b.im))
            });
            return Ok(out);
        }
    }
    Err(Error::ConvergenceFailure { max_residual: last_residual })
}
