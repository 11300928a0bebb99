//! Random unimodular corpus and a definitional weak-irreducibility test,
//! shared by integration tests of both crates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rigidity_core::spectral::splitting::cluster_subspaces;
use rigidity_core::spectral::{analyze, IntegerAutomorphism};

pub fn elementary_walk(rng: &mut ChaCha8Rng, d: usize, steps: usize) -> IntegerAutomorphism {
    let mut m = IntegerAutomorphism::identity(d).entries().clone();
    for _ in 0..steps {
        let i = rng.gen_range(0..d);
        let mut j = rng.gen_range(0..d);
        while j == i {
            j = rng.gen_range(0..d);
        }
        let s: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
        // row_i += s row_j
        let rj = m[j].clone();
        for (a, b) in m[i].iter_mut().zip(rj) {
            *a += b * s;
        }
        if rng.gen_bool(0.15) {
            m.swap(i, j);
        }
    }
    IntegerAutomorphism::new(m).unwrap()
}

fn small_hyperbolic_block(rng: &mut ChaCha8Rng, d: usize) -> IntegerAutomorphism {
    loop {
        let m = elementary_walk(rng, d, 3 * d);
        if let Ok(a) = analyze(&m) {
            if a.is_hyperbolic() {
                return m;
            }
        }
    }
}

pub fn corpus(seed: u64) -> Vec<IntegerAutomorphism> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let dims = [2, 3, 3, 4, 4, 4, 5, 6];
    // Generic products.
    for k in 0..20 {
        let d = dims[k % dims.len()];
        out.push(elementary_walk(&mut rng, d, 4 * d));
    }
    // Block-reducible matrices conjugated by short unimodular words.
    for k in 0..30 {
        let d1 = 2;
        let d2 = [2, 2, 3, 4][k % 4];
        let a = small_hyperbolic_block(&mut rng, d1);
        let b = match k % 3 {
            0 if d2 == 2 => a.inverse(),
            1 if d2 == 2 => a.clone(),
            _ => small_hyperbolic_block(&mut rng, d2),
        };
        let block = a.block_diag(&b);
        let p = elementary_walk(&mut rng, d1 + d2, 2);
        out.push(p.mul(&block).mul(&p.inverse()));
    }
    out
}

/// Definitional test: search for a nonzero integer vector of norm ≤ radius
/// inside the sum of all cluster subspaces but one.
pub fn lattice_witness(m: &IntegerAutomorphism, radius: i64) -> Option<(usize, Vec<i64>)> {
    let a = analyze(m).unwrap();
    let bases = cluster_subspaces(m, &a);
    let d = m.dim();
    let mut t = DMatrix::zeros(d, d);
    let mut offsets = Vec::new();
    let mut c = 0;
    for b in &bases {
        t.view_mut((0, c), (d, b.ncols())).copy_from(b);
        offsets.push((c, b.ncols()));
        c += b.ncols();
    }
    let tinv = t.try_inverse().unwrap();
    for (ci, &(off, k)) in offsets.iter().enumerate() {
        if k == d {
            continue;
        }
        // n lies in the complement sum iff its cluster-ci coordinates vanish.
        let cmat = tinv.rows(off, k).into_owned();
        let cols: Vec<usize> = (0..d).collect();
        let best = subsets(&cols, k)
            .into_iter()
            .max_by(|x, y| min_sv(&cmat.select_columns(x)).total_cmp(&min_sv(&cmat.select_columns(y))))
            .unwrap();
        let free: Vec<usize> = cols.iter().copied().filter(|i| !best.contains(i)).collect();
        let dep_inv = cmat.select_columns(&best).try_inverse().unwrap();
        let gain = -(&dep_inv * cmat.select_columns(&free));
        let scale = cmat.norm();
        let gain_cols: Vec<Vec<f64>> =
            (0..free.len()).map(|j| gain.column(j).iter().copied().collect()).collect();
        let ctx = Search { gain: &gain_cols, r2: radius * radius, k };
        // n and −n are equivalent: fix the sign of the first free coordinate.
        let found = (0..=radius).into_par_iter().find_map_any(|first| {
            let mut nf = vec![0i64; free.len()];
            nf[0] = first;
            let dep: Vec<f64> = gain_cols[0].iter().map(|g| g * first as f64).collect();
            let mut hit = None;
            ctx.walk(&mut nf, 1, first * first, &dep, &mut |nf, dep| {
                if nf.iter().all(|&x| x == 0) {
                    return false;
                }
                let mut n = vec![0i64; d];
                for (i, &f) in free.iter().enumerate() {
                    n[f] = nf[i];
                }
                for (i, &b) in best.iter().enumerate() {
                    n[b] = dep[i].round() as i64;
                }
                if n.iter().map(|x| x * x).sum::<i64>() > radius * radius {
                    return false;
                }
                let nv = DVector::from_iterator(d, n.iter().map(|&x| x as f64));
                if (&cmat * &nv).norm() <= 1e-10 * scale * nv.norm() {
                    hit = Some(n);
                    true
                } else {
                    false
                }
            });
            hit
        });
        if let Some(n) = found {
            return Some((ci, n));
        }
    }
    None
}

struct Search<'a> {
    gain: &'a [Vec<f64>],
    r2: i64,
    k: usize,
}

impl Search<'_> {
    /// Enumerate the remaining free coordinates inside the ball, carrying
    /// the dependent coordinates incrementally; stops when `check` accepts.
    fn walk(
        &self,
        nf: &mut [i64],
        pos: usize,
        used: i64,
        dep: &[f64],
        check: &mut dyn FnMut(&[i64], &[f64]) -> bool,
    ) -> bool {
        if pos == nf.len() {
            if dep.iter().any(|x| (x - x.round()).abs() > 1e-6) {
                return false;
            }
            return check(nf, dep);
        }
        let bound = ((self.r2 - used) as f64).sqrt().floor() as i64;
        let mut next = vec![0.0; self.k];
        for x in -bound..=bound {
            nf[pos] = x;
            for (t, v) in next.iter_mut().enumerate() {
                *v = dep[t] + self.gain[pos][t] * x as f64;
            }
            if self.walk(nf, pos + 1, used + x * x, &next, check) {
                return true;
            }
        }
        nf[pos] = 0;
        false
    }
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = subsets(&items[1..], k);
    for mut s in subsets(&items[1..], k - 1) {
        s.insert(0, items[0]);
        out.push(s);
    }
    out
}

fn min_sv(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}
