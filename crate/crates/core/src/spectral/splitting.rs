//! Lyapunov splitting of a hyperbolic automorphism and adapted norms.

use nalgebra::DMatrix;
use serde::Serialize;

use super::automorphism::IntegerAutomorphism;
use super::classify::{analyze, ModulusCluster, RootEntry, SpectralAnalysis};
use crate::error::{Error, Result};
use crate::linalg;

/// Kernel of q(L) where q collects the roots of one modulus cluster with
/// multiplicities. Real factors only: conjugate pairs become quadratics.
fn cluster_subspace(l: &DMatrix<f64>, roots: &[RootEntry], cluster: &ModulusCluster) -> DMatrix<f64> {
    let d = l.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let mut q = id.clone();
    for &i in &cluster.members {
        let z = roots[i].root.value();
        if z.im < 0.0 {
            continue;
        }
        let factor = if z.im == 0.0 {
            l - &id * z.re
        } else {
            l * l - l * (2.0 * z.re) + &id * z.norm_sqr()
        };
        for _ in 0..roots[i].multiplicity {
            q = &factor * q;
            let n = q.norm();
            if n > 0.0 {
                q /= n;
            }
        }
    }
    linalg::null_space(&q, cluster.dim)
}

/// Orthonormal bases of the subspaces attached to each modulus cluster.
/// Defined for any automorphism, hyperbolic or not.
pub fn cluster_subspaces(m: &IntegerAutomorphism, analysis: &SpectralAnalysis) -> Vec<DMatrix<f64>> {
    let l = m.to_f64();
    analysis.clusters.iter().map(|c| cluster_subspace(&l, &analysis.roots, c)).collect()
}

/// Inner product on a subspace in which the restricted map contracts by
/// `contraction` < 1.
#[derive(Clone, Debug, Serialize)]
pub struct AdaptedNorm {
    /// Gram matrix in basis coordinates.
    #[serde(serialize_with = "ser_matrix")]
    pub gram: DMatrix<f64>,
    /// Spectral radius of the restricted map.
    pub spectral_radius: f64,
    /// Target rate strictly between the spectral radius and 1.
    pub target: f64,
    pub steps: usize,
    /// Operator norm of the restricted map in the adapted inner product.
    pub contraction: f64,
    #[serde(skip)]
    sqrt: DMatrix<f64>,
    #[serde(skip)]
    inv_sqrt: DMatrix<f64>,
}

impl AdaptedNorm {
    /// Power-averaged norm Σ_{k<N} target^{−2k}‖Mᵏv‖² for a map with
    /// spectral radius ρ < 1.
    pub fn build(m: &DMatrix<f64>, rho: f64) -> Self {
        let k = m.nrows();
        let target = rho + (1.0 - rho) / 4.0;
        let mut power = DMatrix::<f64>::identity(k, k);
        let mut steps = 0;
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut weight = 1.0;
        loop {
            gram += power.transpose() * &power * weight;
            power = m * power;
            steps += 1;
            weight /= target * target;
            if linalg::spectral_norm(&power) < target.powi(steps as i32) || steps >= 100_000 {
                break;
            }
        }
        let (sqrt, inv_sqrt) = linalg::spd_sqrt(&gram);
        let contraction = linalg::spectral_norm(&(&sqrt * m * &inv_sqrt));
        Self { gram, spectral_radius: rho, target, steps, contraction, sqrt, inv_sqrt }
    }

    /// ‖c‖ for basis coordinates c.
    pub fn norm_coords(&self, c: &nalgebra::DVector<f64>) -> f64 {
        (&self.sqrt * c).norm()
    }
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    linalg::rows(m).serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovSubspace {
    pub modulus: f64,
    pub exponent: f64,
    #[serde(serialize_with = "ser_matrix")]
    pub basis: DMatrix<f64>,
}

/// Splitting ℝᵈ = E^s ⊕ E^u of a hyperbolic automorphism, refined by
/// moduli, with adapted norms on each side.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    pub analysis: SpectralAnalysis,
    pub subspaces: Vec<LyapunovSubspace>,
    #[serde(serialize_with = "ser_matrix")]
    pub stable: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub unstable: DMatrix<f64>,
    /// Projection onto E^s along E^u.
    #[serde(serialize_with = "ser_matrix")]
    pub proj_stable: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub proj_unstable: DMatrix<f64>,
    /// Adapted norm for L on E^s.
    pub adapted_stable: AdaptedNorm,
    /// Adapted norm for L⁻¹ on E^u.
    pub adapted_unstable: AdaptedNorm,
    #[serde(skip)]
    pub linear: DMatrix<f64>,
    #[serde(skip)]
    pub inverse: DMatrix<f64>,
    #[serde(skip)]
    coords_stable: DMatrix<f64>,
    #[serde(skip)]
    coords_unstable: DMatrix<f64>,
}

pub fn lyapunov_splitting(m: &IntegerAutomorphism) -> Result<SpectralData> {
    let analysis = analyze(m)?;
    if !analysis.is_hyperbolic() {
        return Err(Error::NotHyperbolic);
    }
    let bases = cluster_subspaces(m, &analysis);
    let d = m.dim();
    let stable_idx: Vec<usize> = (0..bases.len()).filter(|&i| analysis.clusters[i].modulus < 1.0).collect();
    let unstable_idx: Vec<usize> = (0..bases.len()).filter(|&i| analysis.clusters[i].modulus > 1.0).collect();
    let concat = |idx: &[usize]| {
        let cols: usize = idx.iter().map(|&i| bases[i].ncols()).sum();
        let mut out = DMatrix::zeros(d, cols);
        let mut c = 0;
        for &i in idx {
            out.view_mut((0, c), (d, bases[i].ncols())).copy_from(&bases[i]);
            c += bases[i].ncols();
        }
        linalg::orthonormalize(&out)
    };
    let stable = concat(&stable_idx);
    let unstable = concat(&unstable_idx);
    let (ks, ku) = (stable.ncols(), unstable.ncols());
    let mut t = DMatrix::zeros(d, d);
    t.view_mut((0, 0), (d, ks)).copy_from(&stable);
    t.view_mut((0, ks), (d, ku)).copy_from(&unstable);
    let tinv = t.clone().try_inverse().ok_or(Error::NotHyperbolic)?;
    let coords_stable = tinv.rows(0, ks).into_owned();
    let coords_unstable = tinv.rows(ks, ku).into_owned();
    let proj_stable = &stable * &coords_stable;
    let proj_unstable = &unstable * &coords_unstable;

    let linear = m.to_f64();
    let inverse = m.inverse().to_f64();
    let ls = stable.transpose() * &linear * &stable;
    let lu_inv = unstable.transpose() * &inverse * &unstable;
    let rho_s = stable_idx.iter().map(|&i| analysis.clusters[i].modulus).fold(0.0, f64::max);
    let rho_u = unstable_idx.iter().map(|&i| 1.0 / analysis.clusters[i].modulus).fold(0.0, f64::max);
    let adapted_stable = AdaptedNorm::build(&ls, rho_s);
    let adapted_unstable = AdaptedNorm::build(&lu_inv, rho_u);

    let subspaces = bases
        .into_iter()
        .zip(&analysis.clusters)
        .map(|(basis, c)| LyapunovSubspace { modulus: c.modulus, exponent: c.exponent(), basis })
        .collect();
    Ok(SpectralData {
        analysis,
        subspaces,
        stable,
        unstable,
        proj_stable,
        proj_unstable,
        adapted_stable,
        adapted_unstable,
        linear,
        inverse,
        coords_stable,
        coords_unstable,
    })
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.linear.nrows()
    }

    /// Coordinates of v's stable and unstable components in the
    /// orthonormal bases of E^s and E^u.
    pub fn split_coords(&self, v: &nalgebra::DVector<f64>) -> (nalgebra::DVector<f64>, nalgebra::DVector<f64>) {
        (&self.coords_stable * v, &self.coords_unstable * v)
    }

    /// max(|v_s|_*, |v_u|_*) in the adapted norms.
    pub fn adapted_norm(&self, v: &nalgebra::DVector<f64>) -> f64 {
        let (s, u) = self.split_coords(v);
        self.adapted_stable.norm_coords(&s).max(self.adapted_unstable.norm_coords(&u))
    }

    /// T with |v|_* = max(|(Tv)_s|, |(Tv)_u|) in Euclidean block norms (the
    /// first `stable_dim` rows are the stable block), and T⁻¹.
    pub fn adapted_frame(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (d, ks) = (self.dim(), self.stable_dim());
        let mut t = DMatrix::zeros(d, d);
        let mut tinv = DMatrix::zeros(d, d);
        t.rows_mut(0, ks).copy_from(&(&self.adapted_stable.sqrt * &self.coords_stable));
        t.rows_mut(ks, d - ks).copy_from(&(&self.adapted_unstable.sqrt * &self.coords_unstable));
        tinv.columns_mut(0, ks).copy_from(&(&self.stable * &self.adapted_stable.inv_sqrt));
        tinv.columns_mut(ks, d - ks).copy_from(&(&self.unstable * &self.adapted_unstable.inv_sqrt));
        (t, tinv)
    }

    /// Contraction rate of the split solver: max(‖L|E^s‖_*, ‖L⁻¹|E^u‖_*).
    pub fn contraction(&self) -> f64 {
        self.adapted_stable.contraction.max(self.adapted_unstable.contraction)
    }

    pub fn stable_dim(&self) -> usize {
        self.stable.ncols()
    }

    pub fn unstable_dim(&self) -> usize {
        self.unstable.ncols()
    }

    /// Largest stable modulus and smallest unstable modulus.
    pub fn rates(&self) -> (f64, f64) {
        let c = &self.analysis.clusters;
        let s = c.iter().filter(|x| x.modulus < 1.0).map(|x| x.modulus).fold(0.0, f64::max);
        let u = c.iter().filter(|x| x.modulus > 1.0).map(|x| x.modulus).fold(f64::INFINITY, f64::min);
        (s, u)
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.analysis.exponents()
    }
}
