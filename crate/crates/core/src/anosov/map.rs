//! Maps of the form f̃ = L + R on the universal cover, R ℤᵈ-periodic.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{lyapunov_splitting, IntegerAutomorphism, SpectralData};
use crate::torus::TrigPoly;

/// Newton stops once the step falls below this multiple of the point scale.
const NEWTON_STEP_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 60;
/// Accepted residual of an inverse solve relative to 1 + |y|.
const NEWTON_ACCEPT: f64 = 1e-11;

/// A diffeomorphism of 𝕋ᵈ homotopic to a linear automorphism, given by a lift.
pub trait TorusMap: Sync {
    fn dim(&self) -> usize;

    /// The automorphism in the homotopy class: f̃(x + k) = f̃(x) + Lk.
    fn linear(&self) -> &IntegerAutomorphism;

    fn lift(&self, x: &[f64]) -> Vec<f64>;

    fn lift_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>);

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.lift_with_jacobian(x).1
    }

    /// Some lift of f⁻¹ at y: a point x with f̃(x) = y.
    fn inverse_lift(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// f on 𝕋ᵈ with coordinates reduced to [0, 1).
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        wrap(&self.lift(x))
    }

    /// f⁻¹ on 𝕋ᵈ, reduced to [0, 1).
    fn apply_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(wrap(&self.inverse_lift(y)?))
    }

    /// f̃ⁿ(x) and Dfⁿ(x) for n ≥ 0.
    fn iterate(&self, x: &[f64], n: usize) -> (Vec<f64>, DMatrix<f64>) {
        let d = self.dim();
        let mut p = x.to_vec();
        let mut jac = DMatrix::identity(d, d);
        for _ in 0..n {
            let (q, j) = self.lift_with_jacobian(&p);
            jac = j * jac;
            p = q;
        }
        (p, jac)
    }

    /// The periodic part f̃(x) − Lx.
    fn perturbation_at(&self, x: &[f64]) -> Vec<f64> {
        let l = linalg_apply(self.linear(), x);
        self.lift(x).iter().zip(l).map(|(a, b)| a - b).collect()
    }
}

pub fn wrap(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.rem_euclid(1.0)).map(|v| if v >= 1.0 { 0.0 } else { v }).collect()
}

/// Distance on 𝕋ᵈ (max over coordinates of the circle distance).
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = (x - y).rem_euclid(1.0);
            t.min(1.0 - t)
        })
        .fold(0.0, f64::max)
}

fn linalg_apply(m: &IntegerAutomorphism, x: &[f64]) -> Vec<f64> {
    (m.to_f64() * DVector::from_column_slice(x)).iter().copied().collect()
}

/// Newton solve of g(x) = y started at x0, where `g` returns value and
/// Jacobian.
pub fn newton_solve<G>(g: G, y: &[f64], x0: Vec<f64>) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> (Vec<f64>, DMatrix<f64>),
{
    let d = y.len();
    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut x = x0;
    let mut best = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let (v, j) = g(&x);
        let r = DVector::from_iterator(d, v.iter().zip(y).map(|(a, b)| a - b));
        let res = linalg::max_abs(&r);
        best = best.min(res);
        let step = j.lu().solve(&r).ok_or_else(|| Error::NewtonDivergence { point: x.clone() })?;
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi -= s;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NewtonDivergence { point: y.to_vec() });
        }
        if linalg::max_abs(&step) <= NEWTON_STEP_TOL * scale {
            break;
        }
    }
    let (v, _) = g(&x);
    let res = v.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if res <= NEWTON_ACCEPT * scale {
        Ok(x)
    } else {
        Err(Error::NewtonDivergence { point: y.to_vec() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallnessReport {
    /// Σ|R̂ₙ| bound on ‖R‖_{C⁰}.
    pub r_c0: f64,
    /// Operator-norm bound on sup ‖DR‖ from coefficient sums.
    pub dr_c0: f64,
    /// sup ‖D²R‖ bound, the Lipschitz constant of DR.
    pub d2r_c0: f64,
    /// Largest ‖DR‖ the uniform cone test tolerates.
    pub cone_threshold: f64,
    pub cone_ok: bool,
    pub warning: Option<String>,
}

/// f̃ = L + R with R a real trigonometric polynomial.
#[derive(Clone, Debug)]
pub struct PerturbedMap {
    linear: IntegerAutomorphism,
    linear_f64: DMatrix<f64>,
    inverse_f64: DMatrix<f64>,
    perturbation: TrigPoly,
    spectral: SpectralData,
    smallness: SmallnessReport,
}

impl PerturbedMap {
    pub fn build(linear: IntegerAutomorphism, perturbation: TrigPoly) -> Result<Self> {
        let d = linear.dim();
        if perturbation.dim() != d || perturbation.range() != d {
            return Err(Error::InvalidInput(format!(
                "perturbation must map 𝕋^{d} to ℝ^{d}, got {} -> {}",
                perturbation.dim(),
                perturbation.range()
            )));
        }
        if perturbation.reality_defect() > 1e-12 {
            return Err(Error::InvalidInput("perturbation is not real-valued".into()));
        }
        let spectral = lyapunov_splitting(&linear)?;
        let smallness = smallness(&spectral, &perturbation);
        Ok(Self {
            linear_f64: linear.to_f64(),
            inverse_f64: linear.inverse().to_f64(),
            linear,
            perturbation,
            spectral,
            smallness,
        })
    }

    pub fn unperturbed(linear: IntegerAutomorphism) -> Result<Self> {
        let d = linear.dim();
        Self::build(linear, TrigPoly::zero(d, d))
    }

    pub fn perturbation(&self) -> &TrigPoly {
        &self.perturbation
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn smallness(&self) -> &SmallnessReport {
        &self.smallness
    }

    pub fn linear_f64(&self) -> &DMatrix<f64> {
        &self.linear_f64
    }

    pub fn inverse_f64(&self) -> &DMatrix<f64> {
        &self.inverse_f64
    }
}

impl TorusMap for PerturbedMap {
    fn dim(&self) -> usize {
        self.linear.dim()
    }

    fn linear(&self) -> &IntegerAutomorphism {
        &self.linear
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let lx = &self.linear_f64 * DVector::from_column_slice(x);
        if self.perturbation.is_empty() {
            return lx.iter().copied().collect();
        }
        let r = self.perturbation.eval(x);
        lx.iter().zip(r).map(|(a, b)| a + b).collect()
    }

    fn lift_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let lx = &self.linear_f64 * DVector::from_column_slice(x);
        if self.perturbation.is_empty() {
            return (lx.iter().copied().collect(), self.linear_f64.clone());
        }
        let (r, dr) = self.perturbation.eval_with_jacobian(x);
        (lx.iter().zip(r).map(|(a, b)| a + b).collect(), &self.linear_f64 + dr)
    }

    fn inverse_lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        let x0: Vec<f64> = (&self.inverse_f64 * DVector::from_column_slice(y)).iter().copied().collect();
        if self.perturbation.is_empty() {
            return Ok(x0);
        }
        newton_solve(|x| self.lift_with_jacobian(x), y, x0)
    }

    fn perturbation_at(&self, x: &[f64]) -> Vec<f64> {
        self.perturbation.eval(x)
    }
}

/// f⁻¹ viewed as a map homotopic to L⁻¹.
#[derive(Clone, Debug)]
pub struct InverseMap<'a> {
    forward: &'a PerturbedMap,
    linear: IntegerAutomorphism,
}

impl<'a> InverseMap<'a> {
    pub fn new(forward: &'a PerturbedMap) -> Self {
        Self { forward, linear: forward.linear.inverse() }
    }
}

impl TorusMap for InverseMap<'_> {
    fn dim(&self) -> usize {
        self.forward.dim()
    }

    fn linear(&self) -> &IntegerAutomorphism {
        &self.linear
    }

    /// Newton failures propagate as NaN so that callers notice.
    fn lift(&self, x: &[f64]) -> Vec<f64> {
        self.forward.inverse_lift(x).unwrap_or_else(|_| vec![f64::NAN; x.len()])
    }

    fn lift_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let y = self.lift(x);
        let j = self.forward.jacobian(&y);
        let d = j.nrows();
        let inv = j.try_inverse().unwrap_or_else(|| DMatrix::from_element(d, d, f64::NAN));
        (y, inv)
    }

    fn inverse_lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward.lift(y))
    }
}

/// Entrywise bounds Bᵢⱼ = Σₙ |R̂ₙ,ᵢ|·2π|nⱼ| dominate |DR(x)| entrywise.
fn derivative_bounds(r: &TrigPoly) -> DMatrix<f64> {
    let d = r.dim();
    let mut b = DMatrix::zeros(r.range(), d);
    for (n, c) in r.iter() {
        for (i, ci) in c.iter().enumerate() {
            for j in 0..d {
                b[(i, j)] += ci.norm() * std::f64::consts::TAU * n[j].abs() as f64;
            }
        }
    }
    b
}

fn second_derivative_bound(r: &TrigPoly) -> f64 {
    let mut per_comp = vec![0.0; r.range()];
    for (n, c) in r.iter() {
        let nn2 = n.iter().map(|&x| (x * x) as f64).sum::<f64>();
        for (acc, ci) in per_comp.iter_mut().zip(c) {
            *acc += ci.norm() * std::f64::consts::TAU.powi(2) * nn2;
        }
    }
    per_comp.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rates of L in the adapted frame: (‖L|E^s‖_*, min expansion on E^u, κ)
/// where κ = ‖T‖‖T⁻¹‖ converts Euclidean operator norms into block norms.
pub(crate) fn adapted_rates(s: &SpectralData) -> (f64, f64, f64) {
    let (t, tinv) = s.adapted_frame();
    let kappa = linalg::spectral_norm(&t) * linalg::spectral_norm(&tinv);
    (s.adapted_stable.contraction, 1.0 / s.adapted_unstable.contraction, kappa)
}

fn smallness(s: &SpectralData, r: &TrigPoly) -> SmallnessReport {
    let (cs, mu, kappa) = adapted_rates(s);
    // Every adapted block of DR is at most δ = κ‖DR‖; the unit cone is
    // invariant with expansion and contraction bounded away from 1 when
    // cs + 2δ ≤ mu − 2δ, cs + 2δ < 1 and mu − 2δ > 1.
    let delta_max = ((mu - cs) / 4.0).min((1.0 - cs) / 2.0).min((mu - 1.0) / 2.0);
    let cone_threshold = delta_max / kappa;
    let dr_c0 = linalg::spectral_norm(&derivative_bounds(r));
    let cone_ok = dr_c0 < cone_threshold;
    let warning = (!cone_ok).then(|| {
        format!("sup|DR| bound {dr_c0:.3e} exceeds the cone-test threshold {cone_threshold:.3e}; hyperbolicity not guaranteed")
    });
    SmallnessReport { r_c0: r.c0_upper(), dr_c0, d2r_c0: second_derivative_bound(r), cone_threshold, cone_ok, warning }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn cat() -> IntegerAutomorphism {
        IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()
    }

    fn sin_x2(eps: f64) -> TrigPoly {
        TrigPoly::sin_mode(2, 2, 0, &[0, 1], eps)
    }

    #[test]
    fn zero_perturbation_reports_zero() {
        let f = PerturbedMap::unperturbed(cat()).unwrap();
        let s = f.smallness();
        assert_eq!((s.r_c0, s.dr_c0, s.d2r_c0), (0.0, 0.0, 0.0));
        assert!(s.cone_ok);
        assert_eq!(f.lift(&[0.25, 0.5]), vec![1.0, 0.75]);
    }

    #[test]
    fn smallness_of_sine_perturbation() {
        let f = PerturbedMap::build(cat(), sin_x2(1e-3)).unwrap();
        assert!((f.smallness().dr_c0 - TAU * 1e-3).abs() < 1e-15);
        assert!(f.smallness().cone_ok);
        let g = PerturbedMap::build(cat(), sin_x2(10.0)).unwrap();
        assert!(!g.smallness().cone_ok);
        assert!(g.smallness().warning.is_some());
    }

    #[test]
    fn non_hyperbolic_base_rejected() {
        let rot = IntegerAutomorphism::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap();
        assert!(matches!(PerturbedMap::unperturbed(rot), Err(Error::NotHyperbolic)));
    }

    #[test]
    fn inverse_round_trip() {
        let f = PerturbedMap::build(cat(), sin_x2(0.05)).unwrap();
        for &x in &[[0.1, 0.2], [0.9, 0.33], [0.5, 0.5]] {
            let y = f.lift(&x);
            let z = f.inverse_lift(&y).unwrap();
            assert!((z[0] - x[0]).abs() < 1e-13 && (z[1] - x[1]).abs() < 1e-13);
        }
        let g = InverseMap::new(&f);
        let back = f.apply(&g.apply(&[0.3, 0.7]));
        assert!(torus_distance(&back, &[0.3, 0.7]) < 1e-13);
    }
}
