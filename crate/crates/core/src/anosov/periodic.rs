//! Periodic points of f = L + R seeded from the exact periodic points of L.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::map::{torus_distance, wrap, TorusMap};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::automorphism::{determinant, IntMatrix};

/// Points closer than this on 𝕋ᵈ are the same periodic point.
pub const DEDUP_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 30;
/// Relative coefficient tolerance for matching characteristic polynomials.
pub const CHARPOLY_TOL: f64 = 1e-8;
/// Relative rank threshold (times the matrix norm).
pub const RANK_TOL: f64 = 1e-8;

fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    linalg::rows(m).serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicOrbit {
    pub period: usize,
    pub minimal_period: usize,
    /// Representative in [0, 1)ᵈ.
    pub point: Vec<f64>,
    /// Integer vector k with f̃ⁿ(p) = p + k.
    pub shift: Vec<f64>,
    pub residual: f64,
    pub newton_iterations: usize,
    /// D_p fⁿ.
    #[serde(serialize_with = "ser_matrix")]
    pub derivative: DMatrix<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicSearch {
    pub period: usize,
    /// |det(Lⁿ − I)|, the number of fixed points of Lⁿ.
    pub expected: u64,
    pub orbits: Vec<PeriodicOrbit>,
    /// Seeds at which Newton failed.
    pub divergent_seeds: Vec<Vec<f64>>,
    /// Converged seeds that landed on an already found point.
    pub merged: usize,
}

impl PeriodicSearch {
    pub fn count_matches(&self) -> bool {
        self.orbits.len() as u64 == self.expected
    }
}

/// Lower-triangular H with HZᵈ = MZᵈ, by unimodular column operations.
fn lower_hermite(m: &IntMatrix) -> IntMatrix {
    let d = m.len();
    let mut h = m.clone();
    for i in 0..d {
        for j in i + 1..d {
            if h[i][j].is_zero() {
                continue;
            }
            let (a, b) = (h[i][i].clone(), h[i][j].clone());
            let eg = a.extended_gcd(&b);
            let (g, s, t) = (eg.gcd, eg.x, eg.y);
            let (ag, bg) = (&a / &g, &b / &g);
            for row in h.iter_mut() {
                let (ci, cj) = (row[i].clone(), row[j].clone());
                row[i] = &s * &ci + &t * &cj;
                row[j] = &ag * &cj - &bg * &ci;
            }
        }
    }
    h
}

fn adjugate(m: &IntMatrix) -> IntMatrix {
    let d = m.len();
    if d == 1 {
        return vec![vec![BigInt::from(1)]];
    }
    let mut adj = vec![vec![BigInt::zero(); d]; d];
    for i in 0..d {
        for j in 0..d {
            let minor: IntMatrix = (0..d)
                .filter(|&r| r != i)
                .map(|r| (0..d).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
                .collect();
            let c = determinant(&minor);
            adj[j][i] = if (i + j) % 2 == 0 { c } else { -c };
        }
    }
    adj
}

/// Exact fixed points of Lⁿ in [0,1)ᵈ with their shifts k = (Lⁿ − I)x.
fn linear_periodic_points<M: TorusMap + ?Sized>(f: &M, n: usize, max_count: u64) -> Result<(u64, Vec<(Vec<f64>, Vec<f64>)>)> {
    let d = f.dim();
    let mut m = f.linear().pow(n as i64).entries().clone();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= 1;
    }
    let det = determinant(&m);
    let count = det.abs().to_u64().filter(|&c| c <= max_count).ok_or_else(|| {
        Error::InvalidInput(format!("|det(L^{n} - I)| = {} exceeds the point budget {max_count}", det.abs()))
    })?;
    let h = lower_hermite(&m);
    let radices: Vec<u64> = (0..d).map(|i| h[i][i].abs().to_u64().expect("diagonal fits")).collect();
    let adj = adjugate(&m);
    let (sign, dabs) = if det.is_negative() { (BigInt::from(-1), -det.clone()) } else { (BigInt::from(1), det.clone()) };
    let mut seeds = Vec::with_capacity(count as usize);
    for idx in 0..count {
        let mut r = idx;
        let k: Vec<BigInt> = radices
            .iter()
            .map(|&q| {
                let v = r % q;
                r /= q;
                BigInt::from(v)
            })
            .collect();
        // x = adj·k / det, reduced to [0,1).
        let num: Vec<BigInt> = adj
            .iter()
            .map(|row| row.iter().zip(&k).map(|(a, b)| a * b).sum::<BigInt>() * &sign)
            .map(|v| v.mod_floor(&dabs))
            .collect();
        let x: Vec<f64> = num.iter().map(|v| v.to_f64().unwrap() / dabs.to_f64().unwrap()).collect();
        let shift: Vec<f64> = m
            .iter()
            .map(|row| {
                let s: BigInt = row.iter().zip(&num).map(|(a, b)| a * b).sum();
                (s / &dabs).to_f64().unwrap()
            })
            .collect();
        seeds.push((x, shift));
    }
    Ok((count, seeds))
}

/// Newton on f̃ⁿ(x) − x = k; returns (point, residual, iterations).
fn newton_periodic<M: TorusMap + ?Sized>(f: &M, n: usize, x0: &[f64], k: &[f64]) -> Option<(Vec<f64>, f64, usize)> {
    let d = f.dim();
    let id = DMatrix::<f64>::identity(d, d);
    let mut x = x0.to_vec();
    let residual = |x: &[f64]| -> (DVector<f64>, DMatrix<f64>) {
        let (y, j) = f.iterate(x, n);
        (DVector::from_iterator(d, (0..d).map(|i| y[i] - x[i] - k[i])), j - &id)
    };
    let mut prev = f64::INFINITY;
    for it in 0..NEWTON_MAX_ITER {
        let (r, j) = residual(&x);
        let res = linalg::max_abs(&r);
        // Done once tiny, or once below tolerance and stalled at roundoff.
        if res < RESIDUAL_TOL * 1e-3 || (res < RESIDUAL_TOL && res > 0.1 * prev) {
            return Some((x, res, it));
        }
        prev = res;
        let step = j.lu().solve(&r)?;
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi -= s;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let (r, _) = residual(&x);
    let res = linalg::max_abs(&r);
    (res < RESIDUAL_TOL).then_some((x, res, NEWTON_MAX_ITER))
}

/// All fixed points of fⁿ, found by Newton from the |det(Lⁿ − I)| exact
/// periodic points of L and deduplicated at `DEDUP_TOL`.
pub fn periodic_points<M: TorusMap + ?Sized>(f: &M, n: usize, max_count: u64) -> Result<PeriodicSearch> {
    if n == 0 {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let (expected, seeds) = linear_periodic_points(f, n, max_count)?;
    let solved: Vec<(Vec<f64>, Option<(Vec<f64>, f64, usize)>)> = seeds
        .par_iter()
        .map(|(x, k)| (x.clone(), newton_periodic(f, n, x, k)))
        .collect();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut divergent_seeds = Vec::new();
    let mut merged = 0;
    for (seed, out) in solved {
        let Some((p, residual, iterations)) = out else {
            divergent_seeds.push(seed);
            continue;
        };
        let point = wrap(&p);
        if orbits.iter().any(|o| torus_distance(&o.point, &point) < DEDUP_TOL) {
            merged += 1;
            continue;
        }
        let (y, derivative) = f.iterate(&point, n);
        let shift: Vec<f64> = y.iter().zip(&point).map(|(a, b)| (a - b).round()).collect();
        let residual = residual.max(y.iter().zip(&point).zip(&shift).map(|((a, b), k)| (a - b - k).abs()).fold(0.0, f64::max));
        let minimal_period = (1..=n)
            .filter(|m| n % m == 0)
            .find(|&m| torus_distance(&f.iterate(&point, m).0, &point) < DEDUP_TOL)
            .unwrap_or(n);
        orbits.push(PeriodicOrbit { period: n, minimal_period, point, shift, residual, newton_iterations: iterations, derivative });
    }
    orbits.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
    Ok(PeriodicSearch { period: n, expected, orbits, divergent_seeds, merged })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Conjugate,
    NotConjugate,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicDataReport {
    pub verdict: Similarity,
    /// Characteristic polynomial of D_pfⁿ, constant term first.
    pub charpoly: Vec<f64>,
    pub linear_charpoly: Vec<f64>,
    pub charpoly_deviation: f64,
    pub moduli: Vec<f64>,
    pub linear_moduli: Vec<f64>,
    pub ranks_match: bool,
    /// C with C⁻¹LⁿC = D_pfⁿ when conjugate.
    pub conjugator: Option<Vec<Vec<f64>>>,
    pub conjugator_cond: Option<f64>,
    pub conjugator_residual: Option<f64>,
}

fn sorted_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = linalg::eigenvalues(m).iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Ranks of q(M)ʲ, j = 1..=mult, for each distinct eigenvalue of `reference`
/// with q the real minimal factor (linear or quadratic).
pub fn rank_profile(m: &DMatrix<f64>, reference: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let d = m.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let eig = linalg::eigenvalues(reference);
    let scale = reference.norm().max(1.0);
    let mut distinct: Vec<(num_complex::Complex64, usize)> = Vec::new();
    for z in eig.iter().filter(|z| z.im >= 0.0) {
        match distinct.iter_mut().find(|(w, _)| (w - z).norm() < 1e-6 * scale) {
            Some(e) => e.1 += 1,
            None => distinct.push((*z, 1)),
        }
    }
    distinct
        .iter()
        .map(|(z, mult)| {
            let q = if z.im.abs() < 1e-12 * scale { m - &id * z.re } else { m * m - m * (2.0 * z.re) + &id * z.norm_sqr() };
            let mut p = id.clone();
            (0..*mult)
                .map(|_| {
                    p = &q * &p;
                    linalg::rank(&p, RANK_TOL)
                })
                .collect()
        })
        .collect()
}

/// C with C⁻¹·a·C ≈ b, chosen as the projection of I onto the near-null
/// space of X ↦ aX − Xb whose dimension equals that of a's commutant.
pub fn similarity_conjugator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = a.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let sylvester = |x: &DMatrix<f64>, y: &DMatrix<f64>| id.kronecker(x) - y.transpose().kronecker(&id);
    let comm = linalg::rank(&sylvester(a, a), 1e-10);
    let nullity = d * d - comm;
    let k = sylvester(a, b);
    let svd = k.svd(false, true);
    let vt = svd.v_t?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    let ivec = DVector::from_column_slice(id.as_slice());
    let mut c = DVector::zeros(d * d);
    for &i in order.iter().take(nullity) {
        let v = vt.row(i).transpose();
        c += &v * v.dot(&ivec);
    }
    let c = DMatrix::from_column_slice(d, d, c.as_slice());
    (linalg::rank(&c, 1e-10) == d).then_some(c)
}

pub fn condition_number(c: &DMatrix<f64>) -> f64 {
    let s = linalg::singular_values(c);
    s[0] / s[s.len() - 1]
}

/// Whether D_pfⁿ is similar to Lⁿ: characteristic polynomials, moduli and
/// the rank profile of q(D)ʲ (Jordan-structure proxy).
pub fn periodic_data_check<M: TorusMap + ?Sized>(f: &M, orbit: &PeriodicOrbit) -> PeriodicDataReport {
    let ln = f.linear().pow(orbit.period as i64);
    let lf = ln.to_f64();
    let dn = &orbit.derivative;
    let linear_charpoly = ln.char_poly().to_f64();
    let charpoly = linalg::char_poly_f64(dn);
    let charpoly_deviation = charpoly
        .iter()
        .zip(&linear_charpoly)
        .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
        .fold(0.0, f64::max);
    let ranks_match = rank_profile(dn, &lf) == rank_profile(&lf, &lf);
    let verdict = if charpoly_deviation > 1e3 * CHARPOLY_TOL || (charpoly_deviation <= CHARPOLY_TOL && !ranks_match) {
        Similarity::NotConjugate
    } else if charpoly_deviation > CHARPOLY_TOL {
        Similarity::Indeterminate
    } else {
        Similarity::Conjugate
    };
    let conj = (verdict == Similarity::Conjugate).then(|| similarity_conjugator(&lf, dn)).flatten();
    let conjugator_residual = conj.as_ref().and_then(|c| {
        let ci = c.clone().try_inverse()?;
        Some((ci * &lf * c - dn).norm() / dn.norm())
    });
    PeriodicDataReport {
        verdict,
        charpoly,
        linear_charpoly,
        charpoly_deviation,
        moduli: sorted_moduli(dn),
        linear_moduli: sorted_moduli(&lf),
        ranks_match,
        conjugator_cond: conj.as_ref().map(condition_number),
        conjugator: conj.as_ref().map(linalg::rows),
        conjugator_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosov::PerturbedMap;
    use crate::spectral::IntegerAutomorphism;
    use crate::torus::TrigPoly;

    fn cat() -> IntegerAutomorphism {
        IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn cat_map_counts() {
        let f = PerturbedMap::unperturbed(cat()).unwrap();
        for (n, want) in [(1, 1), (2, 5), (3, 16)] {
            let s = periodic_points(&f, n, 10_000).unwrap();
            assert_eq!(s.expected, want);
            assert_eq!(s.orbits.len() as u64, want);
        }
        let fixed = periodic_points(&f, 1, 10).unwrap();
        assert_eq!(fixed.orbits[0].point, vec![0.0, 0.0]);
    }

    #[test]
    fn hermite_diagonal_product_is_determinant() {
        let m: IntMatrix = [[4i64, 6, 1], [2, -3, 5], [0, 7, 9]]
            .iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect();
        let h = lower_hermite(&m);
        let prod: BigInt = (0..3).map(|i| h[i][i].clone()).product();
        assert_eq!(prod.abs(), determinant(&m).abs());
        assert!(h[0][1].is_zero() && h[0][2].is_zero() && h[1][2].is_zero());
    }

    #[test]
    fn linear_periodic_data_is_trivial() {
        let f = PerturbedMap::unperturbed(cat()).unwrap();
        for o in periodic_points(&f, 2, 100).unwrap().orbits {
            let r = periodic_data_check(&f, &o);
            assert_eq!(r.verdict, Similarity::Conjugate);
            assert!((r.conjugator_cond.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_perturbation_breaks_periodic_data() {
        let f = PerturbedMap::build(cat(), TrigPoly::sin_mode(2, 2, 0, &[0, 1], 1e-3)).unwrap();
        let s = periodic_points(&f, 1, 10).unwrap();
        assert_eq!(periodic_data_check(&f, &s.orbits[0]).verdict, Similarity::NotConjugate);
    }

    #[test]
    fn conjugator_recovers_similarity() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 1.0, 0.5, 0.0, 0.2, 3.0]);
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.2, 0.3, 0.0, 1.0]);
        let b = c.clone().try_inverse().unwrap() * &a * &c;
        let got = similarity_conjugator(&a, &b).unwrap();
        let back = got.clone().try_inverse().unwrap() * &a * &got;
        assert!((back - b).norm() < 1e-10);
    }
}
