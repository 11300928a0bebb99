//! Certified eigenvalue moduli, their clusters, and the hypothesis flags
//! derived from them.

use serde::{Deserialize, Serialize};

use super::automorphism::{is_zero_matrix, IntegerAutomorphism};
use super::factor::{factor_over_q, Factor};
use super::poly::IntPoly;
use super::roots::{certified_roots_from, CertifiedRoot, Precision, MAX_PRECISION_LEVEL};
use crate::error::{Error, Result};

/// Two moduli closer than this are treated as equal; a modulus closer than
/// this to 1 is treated as lying on the unit circle.
pub const MODULUS_TOL: f64 = 1e-9;

/// A certified root of the characteristic polynomial with bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootEntry {
    pub root: CertifiedRoot,
    pub modulus: f64,
    /// Index into the factor list.
    pub factor: usize,
    pub multiplicity: u32,
    pub cluster: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCluster {
    pub modulus: f64,
    /// Half-width of an interval certainly containing every member modulus.
    pub radius: f64,
    /// Sum of multiplicities, i.e. the dimension of the subspace.
    pub dim: usize,
    pub members: Vec<usize>,
}

impl ModulusCluster {
    pub fn exponent(&self) -> f64 {
        self.modulus.ln()
    }
}

/// Characteristic polynomial, factorization, certified roots and moduli
/// clusters of an automorphism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralAnalysis {
    pub charpoly: IntPoly,
    pub factors: Vec<Factor>,
    pub roots: Vec<RootEntry>,
    /// Sorted by ascending modulus.
    pub clusters: Vec<ModulusCluster>,
    pub precision: Precision,
}

enum Decision {
    Yes,
    No,
    Ambiguous,
}

/// Certified comparison of |a − b| against the tolerance given that each
/// value is only known within its radius.
fn within_tol(a: f64, ra: f64, b: f64, rb: f64) -> Decision {
    let diff = (a - b).abs();
    let slack = ra + rb;
    if diff + slack < MODULUS_TOL {
        Decision::Yes
    } else if diff - slack > MODULUS_TOL {
        Decision::No
    } else {
        Decision::Ambiguous
    }
}

fn try_cluster(entries: &mut [RootEntry]) -> Option<Vec<ModulusCluster>> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].modulus.total_cmp(&entries[b].modulus));
    let mut clusters: Vec<ModulusCluster> = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        let same = if pos == 0 {
            Decision::No
        } else {
            let j = order[pos - 1];
            within_tol(entries[i].modulus, entries[i].root.radius, entries[j].modulus, entries[j].root.radius)
        };
        match same {
            Decision::Ambiguous => return None,
            Decision::Yes => {
                let c = clusters.last_mut().expect("previous cluster");
                c.members.push(i);
                c.dim += entries[i].multiplicity as usize;
            }
            Decision::No => clusters.push(ModulusCluster {
                modulus: 0.0,
                radius: 0.0,
                dim: entries[i].multiplicity as usize,
                members: vec![i],
            }),
        }
    }
    for (k, c) in clusters.iter_mut().enumerate() {
        let n = c.members.len() as f64;
        c.modulus = c.members.iter().map(|&i| entries[i].modulus).sum::<f64>() / n;
        c.radius = c
            .members
            .iter()
            .map(|&i| (entries[i].modulus - c.modulus).abs() + entries[i].root.radius)
            .fold(0.0, f64::max);
        for &i in &c.members {
            entries[i].cluster = k;
        }
        if matches!(within_tol(c.modulus, c.radius, 1.0, 0.0), Decision::Ambiguous) {
            return None;
        }
    }
    Some(clusters)
}

/// Spectral analysis with precision escalation; `Indeterminate` when a
/// modulus comparison stays within certification radius at the top level.
pub fn analyze(m: &IntegerAutomorphism) -> Result<SpectralAnalysis> {
    let charpoly = m.char_poly();
    let factors = factor_over_q(&charpoly)?;
    for level in 0..=MAX_PRECISION_LEVEL {
        let precision = Precision(level);
        let mut entries = Vec::new();
        for (fi, f) in factors.iter().enumerate() {
            for root in certified_roots_from(&f.poly, precision)? {
                entries.push(RootEntry {
                    root,
                    modulus: root.modulus(),
                    factor: fi,
                    multiplicity: f.multiplicity,
                    cluster: 0,
                });
            }
        }
        if let Some(clusters) = try_cluster(&mut entries) {
            return Ok(SpectralAnalysis { charpoly, factors, roots: entries, clusters, precision });
        }
    }
    Err(Error::Indeterminate(format!(
        "moduli of {charpoly} are not separated from the clustering tolerance at the highest precision"
    )))
}

impl SpectralAnalysis {
    pub fn dim(&self) -> usize {
        self.charpoly.degree()
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.clusters.iter().all(|c| (c.modulus - 1.0).abs() > MODULUS_TOL)
    }

    /// Set of cluster indices hit by the roots of each factor.
    pub fn moduli_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.factors.len()];
        for r in &self.roots {
            if !sets[r.factor].contains(&r.cluster) {
                sets[r.factor].push(r.cluster);
            }
        }
        for s in sets.iter_mut() {
            s.sort_unstable();
        }
        sets
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.clusters.iter().map(ModulusCluster::exponent).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationFlags {
    pub hyperbolic: bool,
    pub irreducible: bool,
    pub weakly_irreducible: bool,
    pub no_three_same_modulus: bool,
    pub no_forbidden_pairs: bool,
    pub diagonalizable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub poly: String,
    pub coefficients: IntPoly,
    pub multiplicity: u32,
    /// Distinct root moduli of this factor, ascending.
    pub moduli: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub modulus: f64,
    pub radius: f64,
    pub exponent: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub matrix: IntegerAutomorphism,
    pub charpoly: String,
    pub charpoly_coefficients: IntPoly,
    pub factors: Vec<FactorReport>,
    pub roots: Vec<RootEntry>,
    pub clusters: Vec<ClusterReport>,
    pub flags: ClassificationFlags,
    pub precision_level: u8,
}

/// Real roots a, b with a = −b, or a purely imaginary root (which always
/// comes with its negative).
fn has_forbidden_pair(a: &SpectralAnalysis) -> bool {
    let distinct: Vec<&CertifiedRoot> = a.roots.iter().map(|r| &r.root).collect();
    for (i, x) in distinct.iter().enumerate() {
        let scale = x.modulus().max(1.0);
        if x.im != 0.0 && x.re.abs() <= MODULUS_TOL * scale + x.radius {
            return true;
        }
        if x.im == 0.0 {
            for y in distinct.iter().skip(i + 1) {
                if y.im == 0.0 && (x.re + y.re).abs() <= MODULUS_TOL * scale + x.radius + y.radius {
                    return true;
                }
            }
        }
    }
    false
}

/// Exact diagonalizability over ℂ: the squarefree part of the
/// characteristic polynomial annihilates the matrix.
pub fn is_diagonalizable(m: &IntegerAutomorphism, factors: &[Factor]) -> bool {
    let radical = factors.iter().fold(IntPoly::one(), |acc, f| &acc * &f.poly);
    is_zero_matrix(&m.eval_poly(&radical))
}

pub fn classify(m: &IntegerAutomorphism) -> Result<ClassificationReport> {
    let a = analyze(m)?;
    let sets = a.moduli_sets();
    let flags = ClassificationFlags {
        hyperbolic: a.is_hyperbolic(),
        irreducible: a.factors.len() == 1 && a.factors[0].multiplicity == 1,
        weakly_irreducible: sets.windows(2).all(|w| w[0] == w[1]),
        no_three_same_modulus: a.clusters.iter().all(|c| c.dim <= 2),
        no_forbidden_pairs: !has_forbidden_pair(&a),
        diagonalizable: is_diagonalizable(m, &a.factors),
    };
    let factors = a
        .factors
        .iter()
        .zip(&sets)
        .map(|(f, s)| FactorReport {
            poly: f.poly.to_string(),
            coefficients: f.poly.clone(),
            multiplicity: f.multiplicity,
            moduli: s.iter().map(|&c| a.clusters[c].modulus).collect(),
        })
        .collect();
    let clusters = a
        .clusters
        .iter()
        .map(|c| ClusterReport { modulus: c.modulus, radius: c.radius, exponent: c.exponent(), dim: c.dim })
        .collect();
    Ok(ClassificationReport {
        matrix: m.clone(),
        charpoly: a.charpoly.to_string(),
        charpoly_coefficients: a.charpoly.clone(),
        factors,
        roots: a.roots,
        clusters,
        flags,
        precision_level: a.precision.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IntegerAutomorphism {
        IntegerAutomorphism::from_rows(rows).unwrap()
    }

    #[test]
    fn cat_map_flags() {
        let r = classify(&m(&[vec![2, 1], vec![1, 1]])).unwrap();
        assert!(r.flags.hyperbolic && r.flags.irreducible && r.flags.weakly_irreducible);
        assert!(r.flags.no_forbidden_pairs && r.flags.diagonalizable);
        assert_eq!(r.clusters.len(), 2);
    }

    #[test]
    fn jordan_block_form() {
        let r = classify(&m(&[
            vec![2, 1, 1, 0],
            vec![1, 1, 0, 1],
            vec![0, 0, 2, 1],
            vec![0, 0, 1, 1],
        ]))
        .unwrap();
        assert!(r.flags.weakly_irreducible && !r.flags.irreducible);
        assert!(!r.flags.diagonalizable);
        assert!(r.flags.no_three_same_modulus);
    }

    #[test]
    fn two_distinct_blocks_not_weakly_irreducible() {
        let r = classify(&m(&[
            vec![2, 1, 0, 0],
            vec![1, 1, 0, 0],
            vec![0, 0, 3, 1],
            vec![0, 0, 2, 1],
        ]))
        .unwrap();
        assert!(r.flags.hyperbolic && !r.flags.weakly_irreducible);
        assert_eq!(r.clusters.iter().filter(|c| c.modulus > 1.0).count(), 2);
    }

    #[test]
    fn rotation_is_not_hyperbolic() {
        let r = classify(&m(&[vec![0, -1], vec![1, 0]])).unwrap();
        assert!(!r.flags.hyperbolic);
        assert!(!r.flags.no_forbidden_pairs);
    }

    #[test]
    fn negative_pair_flagged() {
        // diag(L, -L): eigenvalues λ and −λ.
        let r = classify(&m(&[
            vec![2, 1, 0, 0],
            vec![1, 1, 0, 0],
            vec![0, 0, -2, -1],
            vec![0, 0, -1, -1],
        ]))
        .unwrap();
        assert!(!r.flags.no_forbidden_pairs);
        assert!(r.flags.weakly_irreducible);
    }
}
