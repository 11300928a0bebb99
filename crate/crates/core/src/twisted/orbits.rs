//! Segments of orbits of the dual action n ↦ Lᵀn through a frequency ball.

use std::collections::HashSet;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::Result;
use crate::linalg;
use crate::spectral::{lyapunov_splitting, IntegerAutomorphism, SpectralData};
use crate::torus::Freq;

#[derive(Clone, Debug, Serialize)]
pub struct OrbitSegment {
    /// Consecutive points m, Lᵀm, (Lᵀ)²m, … of one orbit.
    pub points: Vec<Freq>,
    /// Index range of the points lying in the inner ball.
    pub inner: (usize, usize),
}

/// The nonzero frequencies with |n|_∞ ≤ F grouped by dual orbit; each
/// segment runs from the first to the last visit of the inner ball and is
/// extended in both directions until it first leaves the ball of radius F′.
#[derive(Clone, Debug, Serialize)]
pub struct DualOrbitDecomposition {
    pub inner_radius: i64,
    pub outer_radius: i64,
    pub segments: Vec<OrbitSegment>,
}

fn sup(n: &[i64]) -> i64 {
    n.iter().map(|x| x.abs()).max().unwrap_or(0)
}

fn apply(m: &[Vec<i64>], n: &[i64]) -> Freq {
    m.iter().map(|row| row.iter().zip(n).map(|(a, b)| a * b).sum()).collect()
}

/// Escape certificates: once the adapted norm of the expanding part
/// exceeds the threshold, the orbit stays outside the outer ball.
struct Escape {
    spec: SpectralData,
    forward: f64,
    backward: f64,
}

impl Escape {
    fn new(t: &IntegerAutomorphism, outer: i64) -> Result<Self> {
        let spec = lyapunov_splitting(t)?;
        let (frame, _) = spec.adapted_frame();
        let d = spec.dim() as f64;
        let r = outer as f64 * d.sqrt();
        let fnorm = linalg::spectral_norm(&frame);
        // |w|₂ ≥ |w|_*/‖T‖ on each block and |n|₂ ≥ |P n|₂/‖P‖.
        let forward = fnorm * linalg::spectral_norm(&spec.proj_unstable) * r;
        let backward = fnorm * linalg::spectral_norm(&spec.proj_stable) * r;
        Ok(Self { spec, forward, backward })
    }

    fn escaped_forward(&self, n: &[i64]) -> bool {
        let v = DVector::from_iterator(n.len(), n.iter().map(|&x| x as f64));
        let (_, u) = self.spec.split_coords(&v);
        self.spec.adapted_unstable.norm_coords(&u) > self.forward
    }

    fn escaped_backward(&self, n: &[i64]) -> bool {
        let v = DVector::from_iterator(n.len(), n.iter().map(|&x| x as f64));
        let (s, _) = self.spec.split_coords(&v);
        self.spec.adapted_stable.norm_coords(&s) > self.backward
    }
}

/// All nonzero n with |n|_∞ ≤ r, lexicographic.
pub fn ball(dim: usize, r: i64) -> Vec<Freq> {
    let side = (2 * r + 1) as usize;
    (0..side.pow(dim as u32))
        .map(|mut i| {
            let mut n = vec![0i64; dim];
            for j in (0..dim).rev() {
                n[j] = (i % side) as i64 - r;
                i /= side;
            }
            n
        })
        .filter(|n| n.iter().any(|&x| x != 0))
        .collect()
}

impl DualOrbitDecomposition {
    pub fn build(l: &IntegerAutomorphism, inner: i64, outer: i64) -> Result<Self> {
        let t = l.transpose();
        let ti = t.inverse();
        let (tm, tim) = (t.to_i64().expect("small entries"), ti.to_i64().expect("small entries"));
        // Lᵀ expands along the unstable space of Lᵀ; the certificate for
        // backward escape uses its stable space.
        let escape = Escape::new(&t, outer)?;
        let d = l.dim();
        let mut seen: HashSet<Freq> = HashSet::new();
        let mut segments = Vec::new();
        for n in ball(d, inner) {
            if seen.contains(&n) {
                continue;
            }
            // Backward until certified escape, recording the orbit.
            let mut back = vec![n.clone()];
            while !(escape.escaped_backward(back.last().unwrap()) && sup(back.last().unwrap()) > outer) {
                let p = apply(&tim, back.last().unwrap());
                back.push(p);
            }
            back.reverse();
            let mut orbit = back;
            while !(escape.escaped_forward(orbit.last().unwrap()) && sup(orbit.last().unwrap()) > outer) {
                let p = apply(&tm, orbit.last().unwrap());
                orbit.push(p);
            }
            let hits: Vec<usize> = (0..orbit.len()).filter(|&i| sup(&orbit[i]) <= inner).collect();
            let (first, last) = (hits[0], *hits.last().unwrap());
            let mut lo = first;
            while lo > 0 && sup(&orbit[lo - 1]) <= outer {
                lo -= 1;
            }
            let mut hi = last;
            while hi + 1 < orbit.len() && sup(&orbit[hi + 1]) <= outer {
                hi += 1;
            }
            for &i in &hits {
                seen.insert(orbit[i].clone());
            }
            let points: Vec<Freq> = orbit[lo..=hi].to_vec();
            segments.push(OrbitSegment { inner: (first - lo, last - lo), points });
        }
        Ok(Self { inner_radius: inner, outer_radius: outer, segments })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Every retained frequency once.
    pub fn frequencies(&self) -> impl Iterator<Item = &Freq> {
        self.segments.iter().flat_map(|s| s.points.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_map_partition() {
        let l = IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        let dec = DualOrbitDecomposition::build(&l, 4, 16).unwrap();
        let mut inner: Vec<Freq> =
            dec.segments.iter().flat_map(|s| s.points[s.inner.0..=s.inner.1].iter().filter(|n| sup(n) <= 4).cloned()).collect();
        inner.sort();
        let mut all = ball(2, 4);
        all.sort();
        assert_eq!(inner, all);
        let t = l.transpose().to_i64().unwrap();
        for s in &dec.segments {
            for w in s.points.windows(2) {
                assert_eq!(apply(&t, &w[0]), w[1]);
            }
        }
    }
}
