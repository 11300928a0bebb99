//! Generators over a base map and their orbit products.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anosov::{PerturbedMap, TorusMap};
use crate::error::{Error, Result};
use crate::torus::{grid::grid_point, TrigPoly};

/// Relative determinant below which a generator value counts as singular.
const SINGULAR_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub enum Generator {
    /// Entries of an m×m matrix, row-major, as one ℝ^{m²}-valued polynomial.
    Entries { size: usize, entries: TrigPoly },
    /// A(x) = D_x f.
    Derivative,
    /// A(x) = D_x f restricted to a Lyapunov subspace of L, read back in
    /// the subspace coordinates: coords · D_x f · basis.
    Restriction { cluster: usize, basis: DMatrix<f64>, coords: DMatrix<f64>, exponent: f64 },
}

#[derive(Clone, Debug)]
pub struct CocycleSpec {
    pub base: PerturbedMap,
    pub generator: Generator,
    /// Hölder exponent of the generator, when known.
    pub beta: Option<f64>,
}

/// Lyapunov subspaces of L ordered by decreasing exponent, with the
/// coordinate maps of the full splitting.
pub fn ordered_subspaces(f: &PerturbedMap) -> Vec<(f64, DMatrix<f64>, DMatrix<f64>)> {
    let mut subs: Vec<_> = f.spectral().subspaces.iter().map(|s| (s.exponent, s.basis.clone())).collect();
    subs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let d = f.dim();
    let mut frame = DMatrix::zeros(d, d);
    let mut col = 0;
    for (_, b) in &subs {
        frame.columns_mut(col, b.ncols()).copy_from(b);
        col += b.ncols();
    }
    let inv = frame.try_inverse().expect("Lyapunov subspaces span");
    let mut row = 0;
    subs.into_iter()
        .map(|(e, b)| {
            let k = b.ncols();
            let coords = inv.rows(row, k).into_owned();
            row += k;
            (e, b, coords)
        })
        .collect()
}

impl CocycleSpec {
    pub fn derivative(base: PerturbedMap) -> Self {
        Self { base, generator: Generator::Derivative, beta: None }
    }

    /// Df restricted to the `cluster`-th Lyapunov subspace of L, counting
    /// from the largest exponent.
    pub fn restriction(base: PerturbedMap, cluster: usize) -> Result<Self> {
        let subs = ordered_subspaces(&base);
        let (exponent, basis, coords) = subs
            .get(cluster)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("L has {} Lyapunov subspaces", subs.len())))?;
        Ok(Self { base, generator: Generator::Restriction { cluster, basis, coords, exponent }, beta: None })
    }

    pub fn entries(base: PerturbedMap, size: usize, entries: TrigPoly) -> Result<Self> {
        if entries.dim() != base.dim() || entries.range() != size * size {
            return Err(Error::InvalidInput(format!("generator must map T^{} to {size}x{size} matrices", base.dim())));
        }
        if entries.reality_defect() > 1e-12 * (1.0 + entries.c0_upper()) {
            return Err(Error::InvalidInput("generator entries are not real".into()));
        }
        Ok(Self { base, generator: Generator::Entries { size, entries }, beta: None })
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    /// Fiber dimension m.
    pub fn size(&self) -> usize {
        match &self.generator {
            Generator::Entries { size, .. } => *size,
            Generator::Derivative => self.base.dim(),
            Generator::Restriction { basis, .. } => basis.ncols(),
        }
    }

    /// A(x), unchecked.
    pub fn generator_at(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.generator {
            Generator::Entries { size, entries } => DMatrix::from_row_slice(*size, *size, &entries.eval(x)),
            Generator::Derivative => self.base.jacobian(x),
            Generator::Restriction { basis, coords, .. } => coords * self.base.jacobian(x) * basis,
        }
    }

    /// A(x), rejecting numerically singular values.
    pub fn checked_generator(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let a = self.generator_at(x);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).powi(a.nrows() as i32);
        if a.determinant().abs() <= SINGULAR_TOL * scale || !a.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularGenerator { point: x.to_vec() });
        }
        Ok(a)
    }

    /// Exponents of the linear model for this generator, decreasing, with
    /// multiplicity; none for a free generator.
    pub fn reference_exponents(&self) -> Option<Vec<f64>> {
        match &self.generator {
            Generator::Entries { .. } => None,
            Generator::Derivative => {
                let mut e: Vec<f64> = self
                    .base
                    .spectral()
                    .subspaces
                    .iter()
                    .flat_map(|s| std::iter::repeat(s.exponent).take(s.basis.ncols()))
                    .collect();
                e.sort_by(|a, b| b.total_cmp(a));
                Some(e)
            }
            Generator::Restriction { basis, exponent, .. } => Some(vec![*exponent; basis.ncols()]),
        }
    }

    /// Smallest |det A| over an N-point-per-axis grid.
    pub fn min_abs_det(&self, n: usize) -> f64 {
        let d = self.base.dim();
        (0..n.pow(d as u32)).map(|i| self.generator_at(&grid_point(i, n, d)).determinant().abs()).fold(f64::INFINITY, f64::min)
    }
}

/// 𝒜(x, n) = A(fⁿ⁻¹x)⋯A(x) for n ≥ 0 and (𝒜(f⁻ⁿx, n))⁻¹ for n < 0.
pub fn cocycle_product(c: &CocycleSpec, x: &[f64], n: i64) -> Result<DMatrix<f64>> {
    let m = c.size();
    if n >= 0 {
        let mut p = x.to_vec();
        let mut acc = DMatrix::identity(m, m);
        for _ in 0..n {
            acc = c.checked_generator(&p)? * acc;
            p = c.base.apply(&p);
        }
        return Ok(acc);
    }
    let mut z = x.to_vec();
    for _ in 0..n.unsigned_abs() {
        z = c.base.apply_inverse(&z)?;
    }
    let forward = cocycle_product(c, &z, -n)?;
    forward.try_inverse().ok_or(Error::SingularGenerator { point: z })
}

/// max relative deviation from 𝒜(x, n+k) = 𝒜(fⁿx, k)·𝒜(x, n) over random
/// (x, n, k) with n, k ≤ `max_steps`.
pub fn product_rule_defect(c: &CocycleSpec, samples: usize, max_steps: i64, seed: u64) -> Result<f64> {
    let d = c.base.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let (n, k) = (rng.gen_range(0..=max_steps), rng.gen_range(0..=max_steps));
        let whole = cocycle_product(c, &x, n + k)?;
        let mut y = x.clone();
        for _ in 0..n {
            y = c.base.apply(&y);
        }
        let split = cocycle_product(c, &y, k)? * cocycle_product(c, &x, n)?;
        let scale = whole.norm().max(1.0);
        worst = worst.max((whole - split).norm() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::IntegerAutomorphism;

    fn cat() -> PerturbedMap {
        PerturbedMap::unperturbed(IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()).unwrap()
    }

    #[test]
    fn constant_generator_powers() {
        let a0 = [1.0, 2.0, 0.5, 3.0];
        let entries = TrigPoly::constant(2, &a0);
        let c = CocycleSpec::entries(cat(), 2, entries).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &a0);
        let p = cocycle_product(&c, &[0.3, 0.1], 5).unwrap();
        assert!((p - m.pow(5)).norm() < 1e-9);
        let q = cocycle_product(&c, &[0.3, 0.1], -2).unwrap();
        let want = m.pow(2).try_inverse().unwrap();
        assert!((q - want).norm() < 1e-12);
    }

    #[test]
    fn derivative_of_linear_map_is_power() {
        let c = CocycleSpec::derivative(cat());
        let l = cat().linear_f64().clone();
        let p = cocycle_product(&c, &[0.7, 0.2], 6).unwrap();
        assert_eq!(p, l.pow(6));
    }

    #[test]
    fn singular_generator_detected() {
        let c = CocycleSpec::entries(cat(), 2, TrigPoly::constant(2, &[1.0, 2.0, 2.0, 4.0])).unwrap();
        assert!(matches!(cocycle_product(&c, &[0.1, 0.1], 1), Err(Error::SingularGenerator { .. })));
    }
}
