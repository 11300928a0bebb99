//! Samples of vector-valued functions on the uniform grid {k/N}ᵈ ⊂ 𝕋ᵈ.
//!
//! Fourier convention: f(x) = Σ f̂ₙ e^{2πi⟨n,x⟩}, and the forward transform
//! of samples divides by Nᵈ. For even N the Nyquist coefficient on each axis
//! is split evenly between +N/2 and −N/2, which keeps real data real.

use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::trigpoly::{Freq, TrigPoly};

/// How off-grid points are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// The trigonometric interpolant through the samples.
    #[default]
    Trigonometric,
    /// Piecewise multilinear on grid cells.
    Multilinear,
}

pub const CONVENTION: &str = "f(x) = sum_n c_n exp(2 pi i <n,x>), c = FFT(samples) / N^d, Nyquist split";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridFunction {
    dim: usize,
    range: usize,
    n: usize,
    convention: String,
    rule: Interpolation,
    /// Row-major over grid points (last axis fastest), `range` values per point.
    samples: Vec<f64>,
    #[serde(skip)]
    spread: OnceLock<Arc<Spreader>>,
}

impl PartialEq for GridFunction {
    fn eq(&self, o: &Self) -> bool {
        self.dim == o.dim && self.range == o.range && self.n == o.n && self.rule == o.rule && self.samples == o.samples
    }
}

/// Multi-index of the flat grid position `idx`.
pub fn grid_index(idx: usize, n: usize, dim: usize) -> Vec<usize> {
    let mut out = vec![0; dim];
    let mut r = idx;
    for j in (0..dim).rev() {
        out[j] = r % n;
        r /= n;
    }
    out
}

pub fn grid_point(idx: usize, n: usize, dim: usize) -> Vec<f64> {
    grid_index(idx, n, dim).into_iter().map(|k| k as f64 / n as f64).collect()
}

/// In-place d-dimensional FFT of a row-major cube of side n. `inverse`
/// uses e^{+2πi…}; no normalization is applied.
pub fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft: Arc<dyn Fft<f64>> = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for k in 0..n {
                    line[k] = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..n {
                    data[base + k * stride] = line[k];
                }
            }
        }
    }
}

/// Frequencies (with weights) represented by grid mode k on one axis.
fn axis_freqs(k: usize, n: usize) -> Vec<(i64, f64)> {
    let k = k as i64;
    let n = n as i64;
    if n % 2 == 0 && k == n / 2 {
        vec![(n / 2, 0.5), (-n / 2, 0.5)]
    } else if k > n / 2 {
        vec![(k - n, 1.0)]
    } else {
        vec![(k, 1.0)]
    }
}

impl GridFunction {
    pub fn from_samples(dim: usize, range: usize, n: usize, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), n.pow(dim as u32) * range, "sample count");
        Self {
            dim,
            range,
            n,
            convention: CONVENTION.to_string(),
            rule: Interpolation::Trigonometric,
            samples,
            spread: OnceLock::new(),
        }
    }

    /// Sample `f` at every grid point (in parallel).
    pub fn from_fn<F>(dim: usize, range: usize, n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let count = n.pow(dim as u32);
        let samples: Vec<f64> = (0..count)
            .into_par_iter()
            .flat_map_iter(|i| {
                let v = f(&grid_point(i, n, dim));
                debug_assert_eq!(v.len(), range);
                v
            })
            .collect();
        Self::from_samples(dim, range, n, samples)
    }

    pub fn zeros(dim: usize, range: usize, n: usize) -> Self {
        Self::from_samples(dim, range, n, vec![0.0; n.pow(dim as u32) * range])
    }

    /// Exact samples of a trigonometric polynomial (aliasing is sampling).
    pub fn sample(p: &TrigPoly, n: usize) -> Self {
        let dim = p.dim();
        let range = p.range();
        let count = n.pow(dim as u32);
        let mut cubes = vec![vec![Complex64::new(0.0, 0.0); count]; range];
        for (freq, c) in p.iter() {
            let idx = freq.iter().fold(0usize, |acc, &f| acc * n + f.rem_euclid(n as i64) as usize);
            for (cube, z) in cubes.iter_mut().zip(c) {
                cube[idx] += z;
            }
        }
        for cube in cubes.iter_mut() {
            fft_nd(cube, n, dim, true);
        }
        let mut samples = vec![0.0; count * range];
        for (i, cube) in cubes.iter().enumerate() {
            for (k, z) in cube.iter().enumerate() {
                samples[k * range + i] = z.re;
            }
        }
        Self::from_samples(dim, range, n, samples)
    }

    pub fn with_rule(mut self, rule: Interpolation) -> Self {
        self.rule = rule;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> Interpolation {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn value(&self, idx: usize) -> &[f64] {
        &self.samples[idx * self.range..(idx + 1) * self.range]
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        grid_point(idx, self.n, self.dim)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Grid average of |f|² (Euclidean over components).
    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    pub fn map_samples<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Self {
        let samples: Vec<f64> = self.samples.chunks(self.range).flat_map(&f).collect();
        let range = samples.len() / self.len();
        Self::from_samples(self.dim, range, self.n, samples).with_rule(self.rule)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.samples.len(), other.samples.len());
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Self::from_samples(self.dim, self.range, self.n, samples).with_rule(self.rule)
    }

    /// Complex coefficient cubes, one per component, indexed like the grid.
    fn coefficient_cubes(&self) -> Vec<Vec<Complex64>> {
        let count = self.len();
        let norm = 1.0 / count as f64;
        (0..self.range)
            .map(|i| {
                let mut cube: Vec<Complex64> =
                    (0..count).map(|k| Complex64::new(self.samples[k * self.range + i], 0.0)).collect();
                fft_nd(&mut cube, self.n, self.dim, false);
                cube.iter_mut().for_each(|z| *z *= norm);
                cube
            })
            .collect()
    }

    /// Σ|ĉₖ|² over the Nᵈ grid modes before the Nyquist split; equals
    /// [`Self::mean_square`] (discrete Plancherel).
    pub fn coefficient_energy(&self) -> f64 {
        self.coefficient_cubes().iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// Fourier coefficients of the trigonometric interpolant.
    pub fn to_trigpoly(&self) -> TrigPoly {
        let cubes = self.coefficient_cubes();
        let mut p = TrigPoly::zero(self.dim, self.range);
        for k in 0..self.len() {
            let c: Vec<Complex64> = cubes.iter().map(|cube| cube[k]).collect();
            if c.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            let idx = grid_index(k, self.n, self.dim);
            let mut freqs: Vec<(Freq, f64)> = vec![(Vec::new(), 1.0)];
            for &kj in &idx {
                let mut next = Vec::new();
                for (f, w) in &freqs {
                    for (a, wa) in axis_freqs(kj, self.n) {
                        let mut g = f.clone();
                        g.push(a);
                        next.push((g, w * wa));
                    }
                }
                freqs = next;
            }
            for (f, w) in freqs {
                p.add_mode(f, c.iter().map(|z| z * w).collect());
            }
        }
        p
    }

    /// Evaluate at one point according to the interpolation rule.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self.rule {
            Interpolation::Trigonometric => self.spreader().eval(x),
            Interpolation::Multilinear => self.eval_multilinear(x),
        }
    }

    /// Evaluate at many points (in parallel).
    pub fn eval_many(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if self.rule == Interpolation::Trigonometric {
            let s = self.spreader();
            xs.par_iter().map(|x| s.eval(x)).collect()
        } else {
            xs.par_iter().map(|x| self.eval_multilinear(x)).collect()
        }
    }

    fn spreader(&self) -> &Spreader {
        self.spread.get_or_init(|| Arc::new(Spreader::new(self)))
    }

    fn eval_multilinear(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut base = vec![0usize; self.dim];
        let mut frac = vec![0.0; self.dim];
        for j in 0..self.dim {
            let t = x[j].rem_euclid(1.0) * n as f64;
            let f = t.floor();
            base[j] = (f as usize) % n;
            frac[j] = t - f;
        }
        let mut out = vec![0.0; self.range];
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut idx = 0usize;
            for j in 0..self.dim {
                let bit = (corner >> j) & 1;
                w *= if bit == 1 { frac[j] } else { 1.0 - frac[j] };
                idx = idx * n + (base[j] + bit) % n;
            }
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(self.value(idx)) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

/// Spreading half-width (grid cells of the oversampled grid).
const SPREAD: i64 = 14;
const OVERSAMPLE: usize = 2;

/// Fast evaluation of the trigonometric interpolant at arbitrary points
/// (non-uniform FFT of type 2 with Gaussian spreading), or direct summation
/// when the grid is small.
#[derive(Debug)]
enum Spreader {
    Direct { dim: usize, range: usize, modes: Vec<(Vec<f64>, Vec<Complex64>)> },
    /// `data` holds the real parts of the deconvolved oversampled grid,
    /// component-interleaved; `ramp[s] = e^{−(s−SPREAD)²h²/4τ}`.
    Gaussian { dim: usize, range: usize, m: usize, tau: f64, data: Vec<f64>, ramp: Vec<f64> },
}

impl Spreader {
    fn new(g: &GridFunction) -> Self {
        let (dim, range, n) = (g.dim, g.range, g.n);
        let direct_cost = n.pow(dim as u32);
        let spread_cost = ((2 * SPREAD + 1) as usize).pow(dim as u32);
        if direct_cost <= spread_cost {
            let p = g.to_trigpoly();
            let modes = p.iter().map(|(f, c)| (f.iter().map(|&x| x as f64).collect(), c.clone())).collect();
            return Spreader::Direct { dim, range, modes };
        }
        let m = OVERSAMPLE * n;
        let r = OVERSAMPLE as f64;
        let tau = PI * SPREAD as f64 / ((n * n) as f64 * r * (r - 0.5));
        // Per-axis placement of grid mode k: oversampled index and weight
        // (Nyquist split, divided by the Gaussian's Fourier coefficient
        // sqrt(τ/π) e^{−k²τ}).
        let axis: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|k| {
                axis_freqs(k, n)
                    .into_iter()
                    .map(|(f, w)| {
                        let kf = f as f64;
                        (f.rem_euclid(m as i64) as usize, w / ((tau / PI).sqrt() * (-kf * kf * tau).exp()))
                    })
                    .collect()
            })
            .collect();
        let src = g.coefficient_cubes();
        let count = m.pow(dim as u32);
        let mut cubes = vec![vec![Complex64::new(0.0, 0.0); count]; range];
        for k in 0..g.len() {
            let idx = grid_index(k, n, dim);
            let mut targets: Vec<(usize, f64)> = vec![(0, 1.0)];
            for &kj in &idx {
                targets = targets.iter().flat_map(|&(t, w)| axis[kj].iter().map(move |&(a, wa)| (t * m + a, w * wa))).collect();
            }
            for (cube, s) in cubes.iter_mut().zip(&src) {
                for &(t, w) in &targets {
                    cube[t] += s[k] * w;
                }
            }
        }
        for cube in cubes.iter_mut() {
            fft_nd(cube, m, dim, true);
        }
        let scale = 1.0 / count as f64;
        let mut data = vec![0.0; count * range];
        for (i, cube) in cubes.iter().enumerate() {
            for (t, z) in cube.iter().enumerate() {
                data[t * range + i] = z.re * scale;
            }
        }
        let h = TAU / m as f64;
        let ramp = (-SPREAD..=SPREAD).map(|s| (-((s as f64) * h).powi(2) / (4.0 * tau)).exp()).collect();
        Spreader::Gaussian { dim, range, m, tau, data, ramp }
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Spreader::Direct { range, modes, dim } => {
                let mut out = vec![0.0; *range];
                for (f, c) in modes {
                    let ph: f64 = (0..*dim).map(|j| f[j] * x[j]).sum();
                    let e = Complex64::from_polar(1.0, TAU * ph);
                    for (o, z) in out.iter_mut().zip(c) {
                        *o += (z * e).re;
                    }
                }
                out
            }
            Spreader::Gaussian { dim, range, m, tau, data, ramp } => {
                let (dim, range, m) = (*dim, *range, *m);
                let h = TAU / m as f64;
                let width = (2 * SPREAD + 1) as usize;
                let mut idx = vec![vec![0usize; width]; dim];
                let mut wts = vec![vec![0.0; width]; dim];
                for j in 0..dim {
                    let t = TAU * x[j].rem_euclid(1.0);
                    let center = (t / h).round() as i64;
                    let d0 = t - center as f64 * h;
                    // e^{−(d0 − s h)²/4τ} = e^{−d0²/4τ}·q^s·ramp[s], q = e^{d0 h/2τ}.
                    let q = (d0 * h / (2.0 * tau)).exp();
                    let mut qs = (-d0 * d0 / (4.0 * tau)).exp() * q.powi(-(SPREAD as i32));
                    for s in 0..width {
                        idx[j][s] = (center + s as i64 - SPREAD).rem_euclid(m as i64) as usize;
                        wts[j][s] = qs * ramp[s];
                        qs *= q;
                    }
                }
                let mut out = vec![0.0; range];
                let last = dim - 1;
                let mut counter = vec![0usize; last];
                loop {
                    let mut w = 1.0;
                    let mut base = 0usize;
                    for j in 0..last {
                        w *= wts[j][counter[j]];
                        base = base * m + idx[j][counter[j]];
                    }
                    let base = base * m;
                    for s in 0..width {
                        let ws = w * wts[last][s];
                        let off = (base + idx[last][s]) * range;
                        for (o, v) in out.iter_mut().zip(&data[off..off + range]) {
                            *o += ws * v;
                        }
                    }
                    let mut j = last;
                    loop {
                        if j == 0 {
                            return out;
                        }
                        j -= 1;
                        counter[j] += 1;
                        if counter[j] < width {
                            break;
                        }
                        counter[j] = 0;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_has_single_coefficient() {
        let g = GridFunction::from_fn(2, 1, 8, |_| vec![3.5]);
        let p = g.to_trigpoly().prune(1e-14);
        assert_eq!(p.len(), 1);
        assert!((p.coeff(&[0, 0])[0].re - 3.5).abs() < 1e-14);
    }

    #[test]
    fn sine_coefficients() {
        let g = GridFunction::from_fn(2, 1, 16, |x| vec![(TAU * x[0]).sin()]);
        let p = g.to_trigpoly().prune(1e-13);
        assert_eq!(p.len(), 2);
        assert!((p.coeff(&[1, 0])[0] - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((p.coeff(&[-1, 0])[0] - Complex64::new(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn off_grid_evaluation_is_spectral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = TrigPoly::zero(2, 2);
        for _ in 0..20 {
            let f = vec![rng.gen_range(-7..=7), rng.gen_range(-7..=7)];
            let c = vec![
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            p.add_mode(f, c);
        }
        let p = p.real_part();
        for n in [16, 64] {
            let g = GridFunction::sample(&p, n);
            for _ in 0..50 {
                let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
                let a = g.eval(&x);
                let b = p.eval(&x);
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() < 1e-11, "N={n}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn multilinear_reproduces_grid_values() {
        let g = GridFunction::from_fn(2, 1, 8, |x| vec![x[0] + 2.0 * x[1]]).with_rule(Interpolation::Multilinear);
        assert!((g.eval(&[0.25, 0.5])[0] - 1.25).abs() < 1e-15);
        assert!((g.eval(&[0.3125, 0.5])[0] - 1.3125).abs() < 1e-15);
    }
}
