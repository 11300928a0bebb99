//! Finite-time Oseledets subspaces as intersections of the expanding flag
//! from the past and the contracting flag from the future.
//!
//! The leading left singular vectors of 𝒜(f⁻ⁿx, n) are computed as the
//! first columns of the QR frame carried from f⁻ⁿx to x, and the leading
//! right singular vectors of 𝒜(x, n) by the same iteration on the
//! transposed products; neither forms the ill-conditioned product itself.

use nalgebra::DMatrix;
use serde::Serialize;

use super::exponents::{generic_frame, lyapunov_qr, QrConfig};
use super::spec::{ordered_subspaces, CocycleSpec, Generator};
use crate::anosov::TorusMap;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, Serialize)]
pub struct OseledetsEstimate {
    pub cluster: usize,
    pub steps: usize,
    /// Orthonormal basis, one column per row of the nested list.
    pub basis: Vec<Vec<f64>>,
    /// Largest principal angle to the matching subspace of L (radians).
    pub angle_to_linear: f64,
    /// Angle between the estimates from n/2 and n steps.
    pub convergence_angle: f64,
    pub exponents: Vec<f64>,
    pub gap: f64,
    pub oscillation: f64,
}

/// First `k` columns of the QR frame after carrying a generic frame along
/// `mats` (applied in order).
fn leading_frame(mats: &[DMatrix<f64>], k: usize) -> DMatrix<f64> {
    let m = mats.first().map_or(0, |a| a.nrows());
    let mut q = generic_frame(m);
    for a in mats {
        q = (a * q).qr().q();
    }
    q.columns(0, k).into_owned()
}

fn estimate(past: &[DMatrix<f64>], future_t: &[DMatrix<f64>], upto: usize, before: usize) -> DMatrix<f64> {
    // E_{≥i} from the past, E_{≤i} = complement of the leading `before`
    // right singular directions of the future product.
    let p = leading_frame(past, upto);
    if before == 0 {
        return p;
    }
    let w = leading_frame(future_t, before);
    let coeffs = linalg::null_space(&(w.transpose() * &p), upto - before);
    linalg::orthonormalize(&(p * coeffs))
}

/// Finite-time estimate at x of the subspace for the `cluster`-th
/// exponent of the derivative cocycle (decreasing order).
pub fn oseledets_subbundle(c: &CocycleSpec, x: &[f64], n: usize, cluster: usize) -> Result<OseledetsEstimate> {
    if !matches!(c.generator, Generator::Derivative) {
        return Err(Error::InvalidInput("Oseledets estimates need the derivative cocycle".into()));
    }
    let subs = ordered_subspaces(&c.base);
    if cluster >= subs.len() {
        return Err(Error::InvalidInput(format!("L has {} Lyapunov subspaces", subs.len())));
    }
    let dims: Vec<usize> = subs.iter().map(|s| s.1.ncols()).collect();
    let before: usize = dims[..cluster].iter().sum();
    let upto = before + dims[cluster];

    // Orbit segment f⁻ⁿx, …, fⁿ⁻¹x.
    let mut back = vec![x.to_vec()];
    for _ in 0..n {
        let z = c.base.apply_inverse(back.last().unwrap())?;
        back.push(z);
    }
    back.reverse();
    let past: Vec<DMatrix<f64>> = back[..n].iter().map(|p| c.checked_generator(p)).collect::<Result<_>>()?;
    let mut fwd = vec![x.to_vec()];
    for _ in 1..n {
        let y = c.base.apply(fwd.last().unwrap());
        fwd.push(y);
    }
    // 𝒜(x, n)ᵀ = A(x)ᵀ⋯A(fⁿ⁻¹x)ᵀ: carry the frame from fⁿ⁻¹x back to x.
    let future_t: Vec<DMatrix<f64>> =
        fwd.iter().rev().map(|p| c.checked_generator(p).map(|a| a.transpose())).collect::<Result<_>>()?;

    let full = estimate(&past, &future_t, upto, before);
    let half = estimate(&past[n / 2..], &future_t[n - n / 2..], upto, before);

    let transient = (n / 5).min(100);
    let qr = lyapunov_qr(c, &back[0], n, &QrConfig { transient, reorth_every: 1 })?;
    let gap_at = |i: usize| qr.exponents[i - 1] - qr.exponents[i];
    let mut gap = f64::INFINITY;
    let mut osc: f64 = 0.0;
    if before > 0 {
        gap = gap.min(gap_at(before));
        osc = osc.max(qr.oscillation[before - 1]).max(qr.oscillation[before]);
    }
    if upto < qr.exponents.len() {
        gap = gap.min(gap_at(upto));
        osc = osc.max(qr.oscillation[upto - 1]).max(qr.oscillation[upto]);
    }
    if gap <= 2.0 * osc {
        return Err(Error::GapTooSmall { gap, oscillation: osc });
    }
    let reference = linalg::orthonormalize(&subs[cluster].1);
    Ok(OseledetsEstimate {
        cluster,
        steps: n,
        angle_to_linear: linalg::subspace_angle(&full, &reference),
        convergence_angle: linalg::subspace_angle(&half, &full),
        basis: full.column_iter().map(|v| v.iter().copied().collect()).collect(),
        exponents: qr.exponents,
        gap,
        oscillation: osc,
    })
}
