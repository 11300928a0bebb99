//! Finite Fourier series of vector-valued ℤᵈ-periodic functions,
//! f(x) = Σₙ f̂ₙ e^{2πi⟨n,x⟩}.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::IntegerAutomorphism;

pub type Freq = Vec<i64>;

/// Sparse coefficients keyed by frequency. Absent frequencies are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    range: usize,
    coeffs: BTreeMap<Freq, Vec<Complex64>>,
}

fn zero_vec(m: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); m]
}

fn dot(n: &[i64], x: &[f64]) -> f64 {
    n.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

/// Tables of e^{2πikxⱼ} for |k| ≤ r, so each mode costs d multiplications.
struct Phases {
    r: i64,
    table: Vec<Vec<Complex64>>,
}

impl Phases {
    fn new(x: &[f64], r: i64) -> Self {
        let table = x
            .iter()
            .map(|&xj| (-r..=r).map(|k| Complex64::from_polar(1.0, TAU * (k as f64 * xj).rem_euclid(1.0))).collect())
            .collect();
        Self { r, table }
    }

    fn get(&self, n: &[i64]) -> Complex64 {
        n.iter().zip(&self.table).fold(Complex64::new(1.0, 0.0), |acc, (&k, t)| acc * t[(k + self.r) as usize])
    }
}

impl TrigPoly {
    pub fn zero(dim: usize, range: usize) -> Self {
        Self { dim, range, coeffs: BTreeMap::new() }
    }

    pub fn constant(dim: usize, value: &[f64]) -> Self {
        let mut p = Self::zero(dim, value.len());
        p.add_mode(vec![0; dim], value.iter().map(|&v| Complex64::new(v, 0.0)).collect());
        p
    }

    /// amplitude · sin(2π⟨n,x⟩) in one component.
    pub fn sin_mode(dim: usize, range: usize, component: usize, freq: &[i64], amplitude: f64) -> Self {
        let mut p = Self::zero(dim, range);
        let mut c = zero_vec(range);
        c[component] = Complex64::new(0.0, -amplitude / 2.0);
        p.add_mode(freq.to_vec(), c.clone());
        c[component] = c[component].conj();
        p.add_mode(freq.iter().map(|x| -x).collect(), c);
        p
    }

    /// amplitude · cos(2π⟨n,x⟩) in one component.
    pub fn cos_mode(dim: usize, range: usize, component: usize, freq: &[i64], amplitude: f64) -> Self {
        let mut p = Self::zero(dim, range);
        let mut c = zero_vec(range);
        c[component] = Complex64::new(amplitude / 2.0, 0.0);
        p.add_mode(freq.to_vec(), c.clone());
        p.add_mode(freq.iter().map(|x| -x).collect(), c);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|v| v.iter().all(|c| c.norm() == 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Freq, &Vec<Complex64>)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, n: &[i64]) -> Vec<Complex64> {
        self.coeffs.get(n).cloned().unwrap_or_else(|| zero_vec(self.range))
    }

    /// Add `c` to the coefficient at `n`.
    pub fn add_mode(&mut self, n: Freq, c: Vec<Complex64>) {
        assert_eq!(n.len(), self.dim, "frequency dimension");
        assert_eq!(c.len(), self.range, "coefficient dimension");
        let e = self.coeffs.entry(n).or_insert_with(|| zero_vec(c.len()));
        for (a, b) in e.iter_mut().zip(c) {
            *a += b;
        }
    }

    pub fn set_mode(&mut self, n: Freq, c: Vec<Complex64>) {
        assert_eq!(c.len(), self.range, "coefficient dimension");
        self.coeffs.insert(n, c);
    }

    /// Largest |nⱼ| over stored frequencies (ℓ∞ radius).
    pub fn radius(&self) -> i64 {
        self.coeffs.keys().flat_map(|n| n.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    pub fn eval_complex(&self, x: &[f64]) -> Vec<Complex64> {
        let mut out = zero_vec(self.range);
        let ph = Phases::new(x, self.radius());
        for (n, c) in &self.coeffs {
            let e = ph.get(n);
            for (o, ci) in out.iter_mut().zip(c) {
                *o += ci * e;
            }
        }
        out
    }

    /// Real part of the value (the function is assumed real-valued).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_complex(x).iter().map(|z| z.re).collect()
    }

    /// Value and Jacobian (range × dim) at x.
    pub fn eval_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let mut val = vec![0.0; self.range];
        let mut jac = DMatrix::zeros(self.range, self.dim);
        let ph = Phases::new(x, self.radius());
        for (n, c) in &self.coeffs {
            let e = ph.get(n);
            for (i, ci) in c.iter().enumerate() {
                let z = ci * e;
                val[i] += z.re;
                // d/dx_j: 2πi n_j z
                for (j, &nj) in n.iter().enumerate() {
                    jac[(i, j)] += -TAU * nj as f64 * z.im;
                }
            }
        }
        (val, jac)
    }

    /// Coefficientwise multiplication by 2πi⟨n,v⟩.
    pub fn derivative(&self, v: &[f64]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(n, c)| {
                let f = Complex64::new(0.0, TAU * dot(n, v));
                (n.clone(), c.iter().map(|z| z * f).collect())
            })
            .filter(|(_, c): &(Freq, Vec<Complex64>)| c.iter().any(|z| z.norm() != 0.0))
            .collect();
        Self { dim: self.dim, range: self.range, coeffs }
    }

    pub fn partial(&self, j: usize) -> Self {
        let mut v = vec![0.0; self.dim];
        v[j] = 1.0;
        self.derivative(&v)
    }

    /// x ↦ f(Mx + c), by exact re-indexing of coefficients: the coefficient
    /// at Mᵀn is f̂ₙ e^{2πi⟨n,c⟩}.
    pub fn compose_affine(&self, m: &IntegerAutomorphism, shift: &[f64]) -> Self {
        let mt = m.transpose().to_i64().expect("matrix entries fit in i64");
        let mut out = Self::zero(self.dim, self.range);
        for (n, c) in &self.coeffs {
            let mtn: Freq = mt.iter().map(|row| row.iter().zip(n).map(|(a, b)| a * b).sum()).collect();
            let phase = Complex64::from_polar(1.0, TAU * dot(n, shift));
            out.add_mode(mtn, c.iter().map(|z| z * phase).collect());
        }
        out
    }

    /// Apply a linear map to the values: x ↦ A·f(x).
    pub fn map_values(&self, a: &DMatrix<f64>) -> Self {
        assert_eq!(a.ncols(), self.range);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(n, c)| {
                let v = (0..a.nrows())
                    .map(|i| (0..self.range).map(|j| c[j] * a[(i, j)]).sum())
                    .collect();
                (n.clone(), v)
            })
            .collect();
        Self { dim: self.dim, range: a.nrows(), coeffs }
    }

    pub fn component(&self, i: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| c[i].norm() != 0.0)
            .map(|(n, c)| (n.clone(), vec![c[i]]))
            .collect();
        Self { dim: self.dim, range: 1, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(n, c)| (n.clone(), c.iter().map(|z| z * s).collect())).collect();
        Self { dim: self.dim, range: self.range, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in &other.coeffs {
            out.add_mode(n.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Drop frequencies outside the ℓ∞ ball of the given radius.
    pub fn truncate(&self, radius: i64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(n, _)| n.iter().all(|x| x.abs() <= radius))
            .map(|(n, c)| (n.clone(), c.clone()))
            .collect();
        Self { dim: self.dim, range: self.range, coeffs }
    }

    /// Drop coefficients whose largest entry is at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| c.iter().any(|z| z.norm() > tol))
            .map(|(n, c)| (n.clone(), c.clone()))
            .collect();
        Self { dim: self.dim, range: self.range, coeffs }
    }

    /// Largest violation of f̂₋ₙ = conj(f̂ₙ).
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, c) in &self.coeffs {
            let m: Freq = n.iter().map(|x| -x).collect();
            let d = self.coeff(&m);
            for (a, b) in c.iter().zip(&d) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Projection onto real-valued functions: (f + f̄)/2.
    pub fn real_part(&self) -> Self {
        let mut out = Self::zero(self.dim, self.range);
        for (n, c) in &self.coeffs {
            let m: Freq = n.iter().map(|x| -x).collect();
            out.add_mode(n.clone(), c.iter().map(|z| z * 0.5).collect());
            out.add_mode(m, c.iter().map(|z| z.conj() * 0.5).collect());
        }
        out
    }

    /// Σₙ |f̂ₙ,ᵢ| maximized over components: an upper bound for the C⁰ norm
    /// (sup over x of the largest component).
    pub fn c0_upper(&self) -> f64 {
        (0..self.range)
            .map(|i| self.coeffs.values().map(|c| c[i].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest component magnitude over an N-per-axis sample grid: a lower
    /// bound for the C⁰ norm.
    pub fn c0_lower(&self, n: usize) -> f64 {
        super::grid::GridFunction::sample(self, n).max_abs()
    }

    /// Upper bound for the C¹ norm: max of the C⁰ bounds of f and its
    /// partial derivatives.
    pub fn c1_upper(&self) -> f64 {
        (0..self.dim).map(|j| self.partial(j).c0_upper()).fold(self.c0_upper(), f64::max)
    }

    pub fn c1_lower(&self, n: usize) -> f64 {
        (0..self.dim).map(|j| self.partial(j).c0_lower(n)).fold(self.c0_lower(n), f64::max)
    }

    /// Upper bound for the β-Hölder seminorm from
    /// |e^{2πi⟨n,x⟩} − e^{2πi⟨n,y⟩}| ≤ 2^{1−β}(2π|n|)^β |x−y|^β.
    pub fn holder_seminorm_upper(&self, beta: f64) -> f64 {
        (0..self.range)
            .map(|i| {
                self.coeffs
                    .iter()
                    .map(|(n, c)| {
                        let nn = n.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                        c[i].norm() * 2f64.powf(1.0 - beta) * (TAU * nn).powf(beta)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Upper bound for ‖f‖_{C^β} = ‖f‖_{C⁰} + [f]_β.
    pub fn holder_norm_upper(&self, beta: f64) -> f64 {
        self.c0_upper() + self.holder_seminorm_upper(beta)
    }

    /// Upper bound for ‖f‖_{C^{1+β}}: C¹ bound plus the β-seminorm bound of
    /// each partial derivative.
    pub fn c1_holder_norm_upper(&self, beta: f64) -> f64 {
        let semi = (0..self.dim).map(|j| self.partial(j).holder_seminorm_upper(beta)).fold(0.0, f64::max);
        self.c1_upper() + semi
    }

    /// L² norm (Parseval), Euclidean over components.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest coefficient difference between two polynomials.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, c) in &self.coeffs {
            for (a, b) in c.iter().zip(other.coeff(n)) {
                worst = worst.max((a - b).norm());
            }
        }
        for (n, c) in &other.coeffs {
            if !self.coeffs.contains_key(n) {
                worst = worst.max(c.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

/// The single mode e^{2πi⟨n,x⟩}.
pub fn unit_mode(n: &[i64], x: &[f64]) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * dot(n, x))
}

#[derive(Serialize, Deserialize)]
struct Wire {
    dim: usize,
    range: usize,
    /// (frequency, [[re, im], ...]) pairs.
    modes: Vec<(Freq, Vec<[f64; 2]>)>,
}

impl Serialize for TrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            dim: self.dim,
            range: self.range,
            modes: self
                .coeffs
                .iter()
                .map(|(n, c)| (n.clone(), c.iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        let mut p = TrigPoly::zero(w.dim, w.range);
        for (n, c) in w.modes {
            if n.len() != w.dim || c.len() != w.range {
                return Err(serde::de::Error::custom("mode shape does not match header"));
            }
            p.add_mode(n, c.into_iter().map(|[re, im]| Complex64::new(re, im)).collect());
        }
        Ok(p)
    }
}
