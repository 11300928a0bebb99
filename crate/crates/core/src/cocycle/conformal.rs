//! Is a matrix similar to a scalar multiple of an orthogonal matrix?

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::spec::{cocycle_product, CocycleSpec};
use crate::anosov::PeriodicOrbit;
use crate::error::Result;
use crate::linalg;

/// Relative decisions below this are exact ties or exact rank drops.
pub const DECIDE_TOL: f64 = 1e-8;
/// Relative decisions above this are definite; in between is indeterminate.
pub const SEPARATE_TOL: f64 = 1e-5;
/// Eigenvalues closer than this (relative to the spectral radius) are one
/// cluster.
const CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conformality {
    Conformal,
    NotConformal,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalityReport {
    pub verdict: Conformality,
    pub moduli: Vec<f64>,
    /// (max − min)/max over eigenvalue moduli.
    pub modulus_spread: f64,
    pub semisimple: Option<bool>,
    /// C with C⁻¹MC conformal, rows as nested lists.
    pub conjugator: Option<Vec<Vec<f64>>>,
    pub cond: Option<f64>,
    /// ‖XᵀX − r²I‖_max / r² for X = C⁻¹MC.
    pub conformal_defect: Option<f64>,
    pub reason: String,
}

struct Cluster {
    value: Complex64,
    multiplicity: usize,
}

fn clusters(eigs: &[Complex64], radius: f64, tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    // Keep one representative per conjugate pair (Im ≥ 0).
    for z in eigs.iter().filter(|z| z.im >= -tol * radius) {
        let z = Complex64::new(z.re, z.im.abs());
        match out.iter_mut().find(|c| (c.value - z).norm() <= tol * radius) {
            Some(c) => {
                c.value = (c.value * c.multiplicity as f64 + z) / (c.multiplicity + 1) as f64;
                c.multiplicity += 1;
            }
            None => out.push(Cluster { value: z, multiplicity: 1 }),
        }
    }
    for c in out.iter_mut() {
        if c.value.im.abs() <= tol * radius {
            c.value.im = 0.0;
        }
    }
    out
}

/// Minimal real polynomial of the cluster evaluated at M and the expected
/// nullity when M is semisimple on it.
fn cluster_operator(m: &DMatrix<f64>, c: &Cluster) -> (DMatrix<f64>, usize, i32) {
    let k = m.nrows();
    let id = DMatrix::<f64>::identity(k, k);
    if c.value.im == 0.0 {
        (m - &id * c.value.re, c.multiplicity, 1)
    } else {
        let q = m * m - m * (2.0 * c.value.re) + &id * c.value.norm_sqr();
        (q, 2 * c.multiplicity, 2)
    }
}

/// Real vectors x, y with M(x + iy) = λ(x + iy), `count` of them
/// independent over ℂ.
fn complex_eigenbasis(m: &DMatrix<f64>, lambda: Complex64, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let k = m.nrows();
    let (a, b) = (lambda.re, lambda.im);
    let mut big = DMatrix::<f64>::zeros(2 * k, 2 * k);
    let shifted = m - DMatrix::<f64>::identity(k, k) * a;
    big.view_mut((0, 0), (k, k)).copy_from(&shifted);
    big.view_mut((k, k), (k, k)).copy_from(&shifted);
    for i in 0..k {
        big[(i, k + i)] = b;
        big[(k + i, i)] = -b;
    }
    let null = linalg::null_space(&big, 2 * count);
    // (x, y) ↦ (−y, x) is multiplication by i; pick vectors independent of
    // the span of the chosen ones and their rotations.
    let mut chosen: Vec<DMatrix<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..null.ncols() {
        let mut w = null.column(j).into_owned();
        for c in &chosen {
            w -= c * (c.transpose() * &w);
        }
        if w.norm() < 0.5 || out.len() == count {
            continue;
        }
        w /= w.norm();
        let mut rot = w.clone();
        for i in 0..k {
            rot[i] = -w[k + i];
            rot[k + i] = w[i];
        }
        let mut pair = DMatrix::zeros(2 * k, 2);
        pair.set_column(0, &w);
        pair.set_column(1, &rot);
        chosen.push(linalg::orthonormalize(&pair));
        out.push(((0..k).map(|i| w[i]).collect(), (0..k).map(|i| w[k + i]).collect()));
    }
    out
}

fn conjugator(m: &DMatrix<f64>, cl: &[Cluster]) -> DMatrix<f64> {
    let k = m.nrows();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for c in cl {
        if c.value.im == 0.0 {
            let id = DMatrix::<f64>::identity(k, k);
            let null = linalg::null_space(&(m - id * c.value.re), c.multiplicity);
            cols.extend(null.column_iter().map(|v| v.iter().copied().collect()));
        } else {
            for (x, y) in complex_eigenbasis(m, c.value, c.multiplicity) {
                cols.push(x);
                cols.push(y);
            }
        }
    }
    DMatrix::from_fn(k, k, |i, j| cols[j][i])
}

enum RankTest {
    Semisimple,
    Defective,
    Undecided,
}

fn rank_test(m: &DMatrix<f64>, cl: &[Cluster]) -> RankTest {
    let norm = linalg::spectral_norm(m);
    let mut verdict = RankTest::Semisimple;
    for c in cl {
        let (q, nullity, degree) = cluster_operator(m, c);
        let mut s = linalg::singular_values(&q);
        s.reverse();
        let last = s[nullity - 1] / norm.powi(degree);
        if last > SEPARATE_TOL {
            return RankTest::Defective;
        } else if last > DECIDE_TOL {
            verdict = RankTest::Undecided;
        }
    }
    verdict
}

fn conformal_defect(x: &DMatrix<f64>, r: f64) -> f64 {
    let k = x.nrows();
    (x.transpose() * x - DMatrix::<f64>::identity(k, k) * (r * r)).amax() / (r * r)
}

pub fn conformality_of(m: &DMatrix<f64>) -> ConformalityReport {
    let k = m.nrows();
    let eigs = linalg::eigenvalues(m);
    let moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    let rmax = moduli.iter().copied().fold(0.0, f64::max);
    let rmin = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if rmax > 0.0 { (rmax - rmin) / rmax } else { 0.0 };
    let mut report = ConformalityReport {
        verdict: Conformality::Indeterminate,
        moduli,
        modulus_spread: spread,
        semisimple: None,
        conjugator: None,
        cond: None,
        conformal_defect: None,
        reason: String::new(),
    };
    if rmax == 0.0 || !rmax.is_finite() {
        report.verdict = Conformality::NotConformal;
        report.reason = "singular or non-finite matrix".into();
        return report;
    }
    if spread > SEPARATE_TOL {
        report.verdict = Conformality::NotConformal;
        report.reason = "eigenvalue moduli differ".into();
        return report;
    }
    if spread > DECIDE_TOL {
        // A defective eigenvalue splits by about the square root of the unit
        // roundoff, which lands here; only a clear rank excess decides.
        if let RankTest::Defective = rank_test(m, &clusters(&eigs, rmax, SEPARATE_TOL)) {
            report.semisimple = Some(false);
            report.verdict = Conformality::NotConformal;
            report.reason = "eigenvalue moduli split like a defective eigenvalue; not semisimple".into();
        } else {
            report.reason = "eigenvalue moduli differ near the decision tolerance".into();
        }
        return report;
    }
    let r = (eigs.iter().map(|z| z.norm().ln()).sum::<f64>() / k as f64).exp();
    let cl = clusters(&eigs, rmax, CLUSTER_TOL);
    let semisimple = match rank_test(m, &cl) {
        RankTest::Semisimple => true,
        RankTest::Defective => false,
        RankTest::Undecided => {
            report.reason = "rank decision near the tolerance".into();
            return report;
        }
    };
    report.semisimple = Some(semisimple);
    if !semisimple {
        report.verdict = Conformality::NotConformal;
        report.reason = "equal moduli but not semisimple".into();
        return report;
    }
    let c = if conformal_defect(m, r) <= DECIDE_TOL { DMatrix::identity(k, k) } else { conjugator(m, &cl) };
    let x = c.clone().try_inverse().map(|ci| ci * m * &c);
    let Some(x) = x else {
        report.reason = "conjugator is singular".into();
        return report;
    };
    let s = linalg::singular_values(&c);
    report.cond = Some(s[0] / s[k - 1]);
    report.conformal_defect = Some(conformal_defect(&x, r));
    report.conjugator = Some(linalg::rows(&c));
    report.verdict = Conformality::Conformal;
    report.reason = "equal moduli and semisimple".into();
    report
}

/// Verdict for 𝒜 over one period of the orbit.
pub fn conformality_check(c: &CocycleSpec, orbit: &PeriodicOrbit) -> Result<ConformalityReport> {
    let prod = cocycle_product(c, &orbit.point, orbit.period as i64)?;
    Ok(conformality_of(&prod))
}
