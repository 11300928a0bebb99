//! Dense floating-point helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Orthonormal basis (columns) of the numerical null space of `m`, whose
/// dimension is known in advance.
pub fn null_space(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let cols = m.ncols();
    // Pad to square so the SVD returns a full right factor.
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut out = DMatrix::zeros(cols, dim);
    for (k, &i) in order.iter().take(dim).enumerate() {
        out.set_column(k, &vt.row(i).transpose());
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)[0]
}

/// Numerical rank with threshold `rel_tol · ‖m‖₂`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rel_tol * top.max(f64::MIN_POSITIVE)).count()
}

/// Orthonormalize the columns of `b` (thin QR).
pub fn orthonormalize(b: &DMatrix<f64>) -> DMatrix<f64> {
    if b.ncols() == 0 {
        return b.clone();
    }
    b.clone().qr().q()
}

/// Largest principal angle (radians) between subspaces of equal dimension
/// given by orthonormal bases.
pub fn subspace_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // ‖(I − P_b) a‖₂ = sin of the largest principal angle for equal dims.
    let proj = b * (b.transpose() * a);
    let resid = a - proj;
    spectral_norm(&resid).min(1.0).asin()
}

/// Symmetric positive definite square root and its inverse.
pub fn spd_sqrt(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = g.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    let si = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt()));
    (v * s * v.transpose(), v * si * v.transpose())
}

/// Complex eigenvalues of a real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// Coefficients (low degree first, monic) of the characteristic polynomial
/// of a real matrix, from its eigenvalues.
pub fn char_poly_f64(m: &DMatrix<f64>) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for z in eigenvalues(m) {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, a) in c.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * z;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(r: &[Vec<f64>]) -> DMatrix<f64> {
    let n = r.len();
    let c = r.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, c, |i, j| r[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let n = null_space(&m, 1);
        assert!((&m * &n).norm() < 1e-14);
        assert!((n.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wide_null_space() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = null_space(&m, 2);
        assert!((&m * &n).norm() < 1e-14);
        assert_eq!(rank(&n, 1e-8), 2);
    }

    #[test]
    fn char_poly_of_cat() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let c = char_poly_f64(&m);
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-12 && c[2] == 1.0);
    }
}
