//! One improvement step: solve the linearized equation for the truncated
//! right-hand side and conjugate f by H′ = Id − h′.

use rayon::prelude::*;
use serde::Serialize;

use super::linearized::{solve_linearized, LinearizedConfig};
use crate::anosov::{PerturbedMap, TorusMap};
use crate::conjugacy::{solve_conjugacy, ConjugacyConfig, ConjugacyResult};
use crate::error::{Error, Result};
use crate::torus::{grid::grid_point, GridFunction, TrigPoly};

/// Which conjugate of f by H′ is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// H′⁻¹∘f∘H′.
    InverseFirst,
    /// H′∘f∘H′⁻¹.
    InverseLast,
}

#[derive(Clone, Debug, Serialize)]
pub struct KamConfig {
    /// Truncation radius F for Q and for the new perturbation.
    pub radius: i64,
    pub linearized: LinearizedConfig,
}

impl Default for KamConfig {
    fn default() -> Self {
        Self { radius: 16, linearized: LinearizedConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientationTrial {
    pub orientation: Orientation,
    pub c0: f64,
    pub c1: f64,
    /// Sup over the grid of the part of f′ − L beyond radius F.
    pub projection_error: f64,
}

/// Every distance is measured on the maps themselves: the input from f,
/// the output from the truncated f′ that is returned.
#[derive(Clone, Debug, Serialize)]
pub struct KamStepReport {
    pub grid: usize,
    pub radius: i64,
    pub outer_radius: i64,
    pub input_c0: f64,
    pub input_c1: f64,
    pub output_c0: f64,
    pub output_c1: f64,
    pub ratio_c0: f64,
    pub orientation: Orientation,
    pub trials: Vec<OrientationTrial>,
    pub no_improvement: bool,
    pub q_c0: f64,
    /// Sup over the grid of the part of Q beyond radius F.
    pub q_truncation: f64,
    pub h_prime_c0: f64,
    pub h_prime_c1: f64,
    pub h_prime_modes: usize,
    pub linearized_residual: f64,
    pub boundary_defect: f64,
    pub tail_bound: f64,
    pub inverse_iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct KamRun {
    pub steps: Vec<KamStepReport>,
    /// C⁰ distance to L before the first step and after each step.
    pub distances: Vec<f64>,
    pub monotone: bool,
    #[serde(skip)]
    pub map: Option<PerturbedMap>,
}

const INVERSE_TOL: f64 = 1e-15;
const INVERSE_MAX: usize = 200;

fn real_projection(g: &GridFunction, radius: i64) -> TrigPoly {
    g.to_trigpoly().truncate(radius).real_part().prune(0.0)
}

/// Solves w − h′(w) = z for every z by the fixed-point iteration
/// w ← z + h′(w), which contracts at rate sup|Dh′|.
fn invert_shift(hp: &GridFunction, zs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut w: Vec<Vec<f64>> = zs.to_vec();
    for it in 1..=INVERSE_MAX {
        let hv = hp.eval_many(&w);
        let next: Vec<Vec<f64>> = zs.iter().zip(&hv).map(|(z, h)| z.iter().zip(h).map(|(a, b)| a + b).collect()).collect();
        let step = next.iter().zip(&w).flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max);
        w = next;
        if step <= INVERSE_TOL * (1.0 + hp.max_abs()) {
            return Ok((w, it));
        }
        if !step.is_finite() {
            break;
        }
    }
    Err(Error::NoContraction { ratio: f64::NAN })
}

fn minus(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
}

fn flatten(v: Vec<Vec<f64>>) -> Vec<f64> {
    v.into_iter().flatten().collect()
}

/// One step from f with conjugacy data h (L∘(x + h) = (x + h)∘f on the grid
/// of `conj`). Returns the truncated f′ of the chosen orientation.
pub fn kam_step(f: &PerturbedMap, conj: &ConjugacyResult, cfg: &KamConfig) -> Result<(PerturbedMap, KamStepReport)> {
    let d = f.dim();
    let n = conj.h.n();
    let count = n.pow(d as u32);
    let l = f.linear();
    let lf = f.linear_f64();
    let li = l.to_i64().ok_or_else(|| Error::InvalidInput("matrix entries too large".into()))?;
    let pts: Vec<Vec<f64>> = (0..count).map(|i| grid_point(i, n, d)).collect();
    let r = f.perturbation();

    // Q = R + h∘f − h∘L on the grid; L maps grid points to grid points.
    let fx: Vec<Vec<f64>> = pts.par_iter().map(|x| f.apply(x)).collect();
    let hf = conj.h.eval_many(&fx);
    let lidx: Vec<usize> = (0..count)
        .map(|k| {
            let idx = crate::torus::grid::grid_index(k, n, d);
            li.iter().fold(0usize, |acc, row| {
                let s: i64 = row.iter().zip(&idx).map(|(a, &b)| a * b as i64).sum();
                acc * n + s.rem_euclid(n as i64) as usize
            })
        })
        .collect();
    let q_samples: Vec<f64> = (0..count)
        .flat_map(|k| {
            let rv = f.perturbation_at(&pts[k]);
            let hl = conj.h.value(lidx[k]);
            (0..d).map(|i| rv[i] + hf[k][i] - hl[i]).collect::<Vec<_>>()
        })
        .collect();
    let q_grid = GridFunction::from_samples(d, d, n, q_samples);
    let q = real_projection(&q_grid, cfg.radius);
    let q_truncation = q_grid.sub(&GridFunction::sample(&q, n)).max_abs();

    let sol = solve_linearized(l, &q, cfg.radius, &cfg.linearized)?;
    let hr = sol.h.radius();
    // A grid whose Nyquist frequency exceeds every mode of h′ interpolates
    // it exactly.
    let m = (2 * hr as usize + 2).next_power_of_two().max(n);
    let hp = GridFunction::sample(&sol.h, m);

    let lx: Vec<Vec<f64>> = pts.iter().map(|x| (lf * nalgebra::DVector::from_column_slice(x)).iter().copied().collect()).collect();
    let mut trials = Vec::new();
    let mut maps = Vec::new();
    let mut iterations = 0;
    for orientation in [Orientation::InverseFirst, Orientation::InverseLast] {
        let images = match orientation {
            Orientation::InverseFirst => {
                let y = minus(&pts, &hp.eval_many(&pts));
                let z: Vec<Vec<f64>> = y.par_iter().map(|p| f.lift(p)).collect();
                let (w, it) = invert_shift(&hp, &z)?;
                iterations = iterations.max(it);
                w
            }
            Orientation::InverseLast => {
                let (w, it) = invert_shift(&hp, &pts)?;
                iterations = iterations.max(it);
                let z: Vec<Vec<f64>> = w.par_iter().map(|p| f.lift(p)).collect();
                minus(&z, &hp.eval_many(&z))
            }
        };
        let rg = GridFunction::from_samples(d, d, n, flatten(minus(&images, &lx)));
        let rp = real_projection(&rg, cfg.radius);
        let projection_error = rg.sub(&GridFunction::sample(&rp, n)).max_abs();
        trials.push(OrientationTrial { orientation, c0: rp.c0_lower(n), c1: rp.c1_lower(n), projection_error });
        maps.push(rp);
    }
    let best = if trials[0].c0 <= trials[1].c0 { 0 } else { 1 };
    let input_c0 = r.c0_lower(n);
    let input_c1 = r.c1_lower(n);
    let chosen = PerturbedMap::build(l.clone(), maps.swap_remove(best))?;
    let output_c0 = chosen.perturbation().c0_lower(n);
    let output_c1 = chosen.perturbation().c1_lower(n);
    let report = KamStepReport {
        grid: n,
        radius: cfg.radius,
        outer_radius: sol.outer_radius,
        input_c0,
        input_c1,
        output_c0,
        output_c1,
        ratio_c0: if input_c0 > 0.0 { output_c0 / input_c0 } else { 0.0 },
        orientation: trials[best].orientation,
        no_improvement: input_c0 > 0.0 && trials.iter().all(|t| t.c0 >= input_c0),
        trials,
        q_c0: q.c0_lower(n),
        q_truncation,
        h_prime_c0: hp.max_abs(),
        h_prime_c1: sol.h.c1_lower(m),
        h_prime_modes: sol.h.len(),
        linearized_residual: sol.residual,
        boundary_defect: sol.boundary_defect,
        tail_bound: sol.tail_bound,
        inverse_iterations: iterations,
    };
    Ok((chosen, report))
}

/// `steps` rounds of conjugacy solve followed by [`kam_step`].
pub fn kam_iterate(f: &PerturbedMap, steps: usize, conj_cfg: &ConjugacyConfig, cfg: &KamConfig) -> Result<KamRun> {
    let mut current = f.clone();
    let mut reports = Vec::with_capacity(steps);
    let mut distances = vec![f.perturbation().c0_lower(conj_cfg.grid)];
    for _ in 0..steps {
        let conj = solve_conjugacy(&current, conj_cfg)?;
        let (next, rep) = kam_step(&current, &conj, cfg)?;
        distances.push(rep.output_c0);
        reports.push(rep);
        current = next;
    }
    let monotone = distances.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0 && w[1] == 0.0);
    Ok(KamRun { steps: reports, distances, monotone, map: Some(current) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::IntegerAutomorphism;

    #[test]
    fn linear_map_is_fixed() {
        let l = IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        let f = PerturbedMap::unperturbed(l).unwrap();
        let cfg = ConjugacyConfig { grid: 32, regularity: false, residual_samples: 10, ..Default::default() };
        let conj = solve_conjugacy(&f, &cfg).unwrap();
        let (g, rep) = kam_step(&f, &conj, &KamConfig::default()).unwrap();
        assert!(g.perturbation().is_zero());
        assert_eq!(rep.h_prime_modes, 0);
        assert!(!rep.no_improvement);
    }
}
