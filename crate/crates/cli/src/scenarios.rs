use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rigidity_core::anosov::{periodic_data_check, periodic_points, verify_anosov, PeriodicOrbit, PerturbedMap, TorusMap};
use rigidity_core::cocycle::{
    conformality_check, dh_as_cocycle_conjugacy, exponents_at_periodic, fiber_bunching_check, lyapunov_qr, lyapunov_volume,
    oseledets_subbundle, CocycleSpec, Conformality, QrConfig,
};
use rigidity_core::conjugacy::{
    build_counterexample, jacobian_dh, shadowing_h, solve_conjugacy, solve_inverse, ConjugacyConfig, ConjugacyResult, Counterexample,
};
use rigidity_core::spectral::{classify, lyapunov_splitting, IntegerAutomorphism};
use rigidity_core::torus::{GridFunction, HolderConfig};
use rigidity_core::twisted::{kam_iterate, solve_linearized, substitution_residual, KamConfig, LinearizedConfig};
use rigidity_core::Error as CoreError;

use crate::manifest::{ExperimentManifest, Scenario};
use crate::output::Plot;
use crate::CliError;

/// Bound on orbits enumerated per period.
const MAX_ORBITS: u64 = 100_000;
/// Points compared against the shadowing oracle.
const ORACLE_POINTS: usize = 100;
const ORACLE_TERMS: usize = 80;
/// Finest and coarsest dyadic scales of the difference-quotient table.
const RATIO_SCALES: (i32, i32) = (4, 20);
const PROFILE_POINTS: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Ok,
    Inconclusive(String),
}

#[derive(Clone, Debug)]
pub struct Artifacts {
    pub status: Status,
    pub result: Value,
    pub plots: Vec<Plot>,
}

impl Artifacts {
    fn ok(result: Value, plots: Vec<Plot>) -> Self {
        Self { status: Status::Ok, result, plots }
    }
}

pub(crate) struct System {
    pub map: PerturbedMap,
    pub skew: Option<Counterexample>,
}

fn ctx(m: &ExperimentManifest) -> impl Fn(CoreError) -> CliError {
    let scenario = m.scenario.name();
    move |source| CliError::Core { scenario, source }
}

fn value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub(crate) fn linear(m: &ExperimentManifest) -> Result<IntegerAutomorphism, CliError> {
    let a = IntegerAutomorphism::from_rows(&m.matrix).map_err(ctx(m))?;
    match &m.base_matrix {
        Some(b) => Ok(a.block_diag(&IntegerAutomorphism::from_rows(b).map_err(ctx(m))?)),
        None => Ok(a),
    }
}

pub(crate) fn system(m: &ExperimentManifest) -> Result<System, CliError> {
    let a = IntegerAutomorphism::from_rows(&m.matrix).map_err(ctx(m))?;
    match &m.base_matrix {
        Some(b) => {
            let b = IntegerAutomorphism::from_rows(b).map_err(ctx(m))?;
            let ce = build_counterexample(&a, &b, &m.perturbation_poly(), m.numerics.terms).map_err(ctx(m))?;
            Ok(System { map: ce.map.clone(), skew: Some(ce) })
        }
        None => Ok(System { map: PerturbedMap::build(a, m.perturbation_poly()).map_err(ctx(m))?, skew: None }),
    }
}

pub(crate) fn conjugacy_config(m: &ExperimentManifest, regularity: bool) -> ConjugacyConfig {
    let n = &m.numerics;
    ConjugacyConfig { grid: n.grid, tol: n.tol, residual_samples: n.samples, seed: n.seed, regularity, ..Default::default() }
}

pub(crate) fn kam_config(m: &ExperimentManifest) -> KamConfig {
    KamConfig { radius: m.numerics.radius, ..Default::default() }
}

fn holder_config(m: &ExperimentManifest) -> HolderConfig {
    HolderConfig { pairs_per_scale: m.numerics.holder_pairs, seed: m.numerics.seed, ..Default::default() }
}

fn random_points(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect()
}

fn orbits(m: &ExperimentManifest, f: &PerturbedMap) -> Result<Vec<PeriodicOrbit>, CliError> {
    let mut all = vec![];
    for &p in &m.numerics.periods {
        all.extend(periodic_points(f, p, MAX_ORBITS).map_err(ctx(m))?.orbits);
    }
    Ok(all)
}

/// Values of the first component of `g` along the last coordinate axis.
fn axis_profile(dim: usize, g: impl Fn(&[f64]) -> f64) -> Vec<(f64, f64)> {
    (0..PROFILE_POINTS)
        .map(|k| {
            let t = k as f64 / PROFILE_POINTS as f64;
            let mut x = vec![0.0; dim];
            x[dim - 1] = t;
            (t, g(&x))
        })
        .collect()
}

pub fn execute(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    match m.scenario {
        Scenario::Classify => run_classify(m),
        Scenario::Conjugate => run_conjugate(m),
        Scenario::Counterexample => run_counterexample(m),
        Scenario::Linearized => run_linearized(m),
        Scenario::Kam => run_kam(m),
        Scenario::Lyapunov => run_lyapunov(m),
        Scenario::Cocycle => run_cocycle(m),
        Scenario::Regularity => run_regularity(m),
    }
}

fn run_classify(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let l = linear(m)?;
    let report = classify(&l).map_err(ctx(m))?;
    let roots = report.roots.iter().map(|r| (r.root.re, r.root.im)).collect();
    let mut result = json!({ "classification": report });
    if !m.perturbation.is_empty() && report.flags.hyperbolic {
        let sys = system(m)?;
        result["smallness"] = value(sys.map.smallness());
        result["anosov"] = value(&verify_anosov(&sys.map, None).map_err(ctx(m))?);
    }
    Ok(Artifacts::ok(result, vec![Plot::new("roots", "re", "im", roots)]))
}

fn periodic_covariance(f: &PerturbedMap, r: &ConjugacyResult, orbits: &[PeriodicOrbit]) -> Result<f64, CoreError> {
    let l = f.linear();
    let mut worst = 0.0f64;
    for o in orbits {
        let hp = DVector::from_column_slice(&r.conj_at(f, &o.point)?);
        let moved = l.pow(o.period as i64).to_f64() * &hp - &hp;
        worst = moved.iter().map(|e| (e - e.round()).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

fn run_conjugate(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let f = &sys.map;
    let r = solve_conjugacy(f, &conjugacy_config(m, false)).map_err(ctx(m))?;
    let spec = lyapunov_splitting(f.linear()).map_err(ctx(m))?;
    let mut oracle = 0.0f64;
    for x in random_points(ORACLE_POINTS, f.dim(), m.numerics.seed ^ 0x5eed) {
        let (a, b) = (r.h_at(f, &x).map_err(ctx(m))?, shadowing_h(f, &spec, &x, ORACLE_TERMS).map_err(ctx(m))?);
        oracle = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(oracle, f64::max);
    }
    let found = orbits(m, f)?;
    let covariance = periodic_covariance(f, &r, &found).map_err(ctx(m))?;
    let profile = axis_profile(f.dim(), |x| r.h.eval(x)[0]);
    let result = json!({
        "identity": r.h.max_abs() == 0.0,
        "oracle_points": ORACLE_POINTS,
        "oracle_agreement": oracle,
        "periodic_orbits_tested": found.len(),
        "periodic_covariance": covariance,
        "conjugacy": r,
    });
    Ok(Artifacts::ok(result, vec![Plot::new("h_profile", "t", "h1(0,t)", profile)]))
}

fn run_counterexample(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let ce = sys.skew.expect("validated skew product");
    let seed = m.numerics.seed;
    let (cohomological, conjugacy) = ce.residuals(m.numerics.samples, seed);
    let scales: Vec<(f64, f64)> = (RATIO_SCALES.0..=RATIO_SCALES.1)
        .map(|j| {
            let delta = 2f64.powi(-j);
            (delta, ce.difference_ratio(delta, m.numerics.holder_pairs, seed.wrapping_add(j as u64)))
        })
        .collect();
    let ratio_growth = scales.last().unwrap().1 / scales[0].1;
    let (holder, status) = match ce.holder(&holder_config(m)) {
        Ok(h) => (Some(h), Status::Ok),
        Err(e) => (None, Status::Inconclusive(e.to_string())),
    };
    let profile = axis_profile(2, |y| ce.psi(y));
    let result = json!({
        "construction": ce,
        "residuals": { "samples": m.numerics.samples, "cohomological": cohomological, "conjugacy": conjugacy },
        "predicted_exponent": ce.predicted_exponent(),
        "holder": holder,
        "difference_ratio": { "scales": scales, "finest_over_coarsest": ratio_growth },
    });
    let plots = vec![Plot::new("psi", "y2", "psi(0,y2)", profile), Plot::new("difference_ratio", "delta", "sup_ratio", scales)];
    Ok(Artifacts { status, result, plots })
}

fn run_linearized(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let l = sys.map.linear();
    let q = sys.map.perturbation();
    let sol = solve_linearized(l, q, m.numerics.radius, &LinearizedConfig::default()).map_err(ctx(m))?;
    let check = substitution_residual(l, &sol.h, q);
    let mut shells = vec![0.0f64; sol.outer_radius as usize + 1];
    for (n, c) in sol.h.iter() {
        let r = n.iter().map(|k| k.abs()).max().unwrap_or(0) as usize;
        shells[r] = c.iter().map(|z| z.norm()).fold(shells[r], f64::max);
    }
    let shells = shells.into_iter().enumerate().map(|(r, v)| (r as f64, v)).collect();
    let result = json!({ "solution": sol, "substitution_residual": check, "h": sol.h });
    Ok(Artifacts::ok(result, vec![Plot::new("coefficient_decay", "shell_radius", "max_abs_coefficient", shells)]))
}

fn run_kam(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let run = kam_iterate(&sys.map, m.numerics.kam_steps, &conjugacy_config(m, false), &kam_config(m)).map_err(ctx(m))?;
    let plot = run.distances.iter().enumerate().map(|(k, &d)| (k as f64, d)).collect();
    let status = if run.monotone {
        Status::Ok
    } else {
        Status::Inconclusive("distance to L did not decrease at every step; see per-step orientation trials".into())
    };
    Ok(Artifacts { status, result: json!({ "kam": run }), plots: vec![Plot::new("distance", "step", "c0_distance", plot)] })
}

fn run_lyapunov(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let c = CocycleSpec::derivative(sys.map.clone());
    let cfg = QrConfig::default();
    let n = &m.numerics;
    let x = random_points(1, sys.map.dim(), n.seed).remove(0);
    let single = lyapunov_qr(&c, &x, n.steps, &cfg).map_err(ctx(m))?;
    let volume = lyapunov_volume(&c, n.volume_grid, n.steps, &cfg, n.seed).map_err(ctx(m))?;
    let found = orbits(m, &sys.map)?;
    let periodic = found.iter().map(|o| exponents_at_periodic(&c, o)).collect::<Result<Vec<_>, _>>().map_err(ctx(m))?;
    let worst = periodic.iter().filter_map(|r| r.max_deviation).fold(0.0, f64::max);
    let plot = periodic.iter().enumerate().map(|(k, r)| (k as f64, r.max_deviation.unwrap_or(f64::NAN))).collect();
    let result = json!({
        "qr": single,
        "volume": volume,
        "periodic": {
            "scope": "all tested orbits",
            "periods": n.periods,
            "orbits": periodic.len(),
            "max_deviation": worst,
            "reports": periodic,
        },
    });
    Ok(Artifacts::ok(result, vec![Plot::new("periodic_deviation", "orbit", "max_deviation", plot)]))
}

fn run_cocycle(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let n = &m.numerics;
    let beta = n.beta.unwrap_or(1.0);
    let c = match n.cluster {
        Some(k) => CocycleSpec::restriction(sys.map.clone(), k).map_err(ctx(m))?,
        None => CocycleSpec::derivative(sys.map.clone()),
    }
    .with_beta(beta);
    let hyperbolicity = verify_anosov(&sys.map, None).map_err(ctx(m))?;
    let bunching = fiber_bunching_check(&c, beta, &hyperbolicity, n.volume_grid).map_err(ctx(m))?;
    let found = orbits(m, &sys.map)?;
    let mut reports = vec![];
    let mut counts = [0usize; 3];
    let mut max_cond = 0.0f64;
    for o in &found {
        let rep = conformality_check(&c, o).map_err(ctx(m))?;
        counts[match rep.verdict {
            Conformality::Conformal => 0,
            Conformality::NotConformal => 1,
            Conformality::Indeterminate => 2,
        }] += 1;
        if let Some(k) = rep.cond {
            max_cond = max_cond.max(k);
        }
        let data = periodic_data_check(&sys.map, o);
        reports.push(json!({ "period": o.period, "point": o.point, "conformality": rep, "periodic_data": data }));
    }
    let oseledets = match n.cluster {
        Some(k) => {
            let x = random_points(1, sys.map.dim(), n.seed).remove(0);
            let d = CocycleSpec::derivative(sys.map.clone());
            Some(value(&oseledets_subbundle(&d, &x, n.steps, k).map_err(ctx(m))?))
        }
        None => None,
    };
    let result = json!({
        "generator": if n.cluster.is_some() { "restriction" } else { "derivative" },
        "cluster": n.cluster,
        "hyperbolicity": hyperbolicity,
        "bunching": bunching,
        "conformality": {
            "scope": "all tested orbits",
            "conformal": counts[0],
            "not_conformal": counts[1],
            "indeterminate": counts[2],
            "max_conjugator_cond": max_cond,
            "orbits": reports,
        },
        "oseledets": oseledets,
    });
    Ok(Artifacts::ok(result, vec![]))
}

fn with_identity(dh: &GridFunction, d: usize) -> GridFunction {
    dh.map_samples(|v| {
        let mut w = v.to_vec();
        (0..d).for_each(|i| w[i * d + i] += 1.0);
        w
    })
}

fn run_regularity(m: &ExperimentManifest) -> Result<Artifacts, CliError> {
    let sys = system(m)?;
    let f = &sys.map;
    let r = solve_conjugacy(f, &conjugacy_config(m, true)).map_err(ctx(m))?;
    let (dh, dh_report) = jacobian_dh(f, &r);
    let cocycle = dh_as_cocycle_conjugacy(&with_identity(&dh, f.dim()), f, Some(&holder_config(m)));
    let inverse = solve_inverse(&r);
    let plot = r
        .metrics
        .holder_h
        .as_ref()
        .map(|h| h.scales.iter().map(|s| (s.delta, s.sup_increment)).collect())
        .unwrap_or_default();
    let result = json!({
        "metrics": r.metrics,
        "residual": r.residual,
        "dh": dh_report,
        "dh_cocycle": cocycle,
        "inverse": { "residual": inverse.residual, "failures": inverse.failures },
        "perturbation_c1": f.perturbation().c1_upper(),
        "perturbation_c1_holder": f.perturbation().c1_holder_norm_upper(m.numerics.beta.unwrap_or(1.0)),
    });
    Ok(Artifacts::ok(result, vec![Plot::new("h_increments", "delta", "sup_increment", plot)]))
}
