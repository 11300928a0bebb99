//! Acceptance suite: every criterion at its stated tolerance, one line each.
//! Runs without the libtest harness so the lines always reach stdout.

#[path = "../../core/tests/support/lattice.rs"]
mod lattice;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rigidity_cli::{compare, run, ExperimentManifest, Scenario, EXIT_OK};
use rigidity_core::anosov::{periodic_points, PerturbedMap};
use rigidity_core::cocycle::{conformality_of, Conformality};
use rigidity_core::conjugacy::{solve_conjugacy, ConjugacyConfig};
use rigidity_core::spectral::{classify, IntegerAutomorphism};
use rigidity_core::torus::TrigPoly;
use rigidity_core::twisted::{solve_linearized, LinearizedConfig};
use rigidity_core::Error;

const EPS: f64 = 1e-3;
const GRID: usize = 256;

fn golden_square() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

fn cat() -> IntegerAutomorphism {
    IntegerAutomorphism::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

/// Manifests executed so far, with the directory holding the first run.
struct Runs {
    root: PathBuf,
    done: Vec<(ExperimentManifest, PathBuf)>,
}

impl Runs {
    fn run(&mut self, m: &ExperimentManifest) -> (Value, PathBuf, f64) {
        let dir = self.root.join(format!("first-{}", self.done.len()));
        let start = Instant::now();
        let out = run(m, &dir);
        let secs = start.elapsed().as_secs_f64();
        assert_eq!(out.exit_code, EXIT_OK, "{}: {:?}", m.stem(), out.message);
        self.done.push((m.clone(), dir.clone()));
        (serde_json::from_str(&fs::read_to_string(&out.record).unwrap()).unwrap(), dir, secs)
    }
}

fn get(v: &Value, path: &str) -> f64 {
    path.split('.').fold(v, |acc, k| &acc[k]).as_f64().unwrap_or_else(|| panic!("missing number at {path}"))
}

fn conjugate_manifest(eps: f64) -> ExperimentManifest {
    let mut m = ExperimentManifest::default_for(Scenario::Conjugate);
    m.eps = eps;
    m.numerics.grid = GRID;
    m.numerics.samples = 10_000;
    m
}

// Criterion 1 -----------------------------------------------------------------

/// Classifier verdict against the definitional lattice search on the random corpus.
fn lattice_sweep() -> Value {
    let rows: Vec<Value> = lattice::corpus(2024)
        .iter()
        .map(|m| {
            let verdict = match classify(m) {
                Ok(r) => json!(r.flags.weakly_irreducible),
                Err(Error::Indeterminate(_)) => json!("indeterminate"),
                Err(e) => panic!("{m}: {e}"),
            };
            json!({ "dim": m.dim(), "classifier": verdict, "lattice": lattice::lattice_witness(m, 20).is_none() })
        })
        .collect();
    json!(rows)
}

fn criterion_1(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let blocks = [
        ("cat", vec![vec![2, 1], vec![1, 1]], [true, true, true]),
        ("diag(L,L)", vec![vec![2, 1, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 2, 1], vec![0, 0, 1, 1]], [true, false, true]),
        ("[[L,I],[0,L]]", vec![vec![2, 1, 1, 0], vec![1, 1, 0, 1], vec![0, 0, 2, 1], vec![0, 0, 1, 1]], [true, false, true]),
    ];
    let mut problems = vec![];
    for (name, matrix, want) in blocks {
        let mut m = ExperimentManifest::default_for(Scenario::Classify);
        m.matrix = matrix;
        m.output.stem = Some(format!("classify-{}", name.replace(['[', ']', '(', ')', ','], "")));
        let (r, _, _) = runs.run(&m);
        let flags = &r["result"]["classification"]["flags"];
        let got = ["hyperbolic", "irreducible", "weakly_irreducible"].map(|k| flags[k].as_bool().unwrap());
        if got != want {
            problems.push(format!("{name} flags {got:?}"));
        }
    }
    let sweep = lattice_sweep();
    let rows = sweep.as_array().unwrap();
    let agree = rows.iter().filter(|r| r["classifier"] == r["lattice"]).count();
    let max_dim = rows.iter().map(|r| r["dim"].as_u64().unwrap()).max().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = problems.is_empty() && rows.len() == 50 && agree == 50 && max_dim <= 6 && secs < 10.0;
    Outcome { pass, detail: format!("blocks {}; lattice agreement {agree}/{} (d<=6); {secs:.1}s < 10s", if problems.is_empty() { "ok".into() } else { problems.join(", ") }, rows.len()) }
}

// Criterion 2 -----------------------------------------------------------------

/// Truncated series Σ λ^{-(k+1)} φ(Bᵏy) with Bᵏy exact on the 1/1024 lattice.
fn psi_series(j: i64, terms: usize) -> f64 {
    let lambda = golden_square();
    let mut y = [0i64, j];
    let mut sum = 0.0;
    for k in 0..terms {
        sum += lambda.powi(-(k as i32 + 1)) * 0.01 * (std::f64::consts::TAU * y[0] as f64 / 1024.0).sin();
        y = [(3 * y[0] + y[1]).rem_euclid(1024), (2 * y[0] + y[1]).rem_euclid(1024)];
    }
    sum
}

fn read_plot(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn criterion_2(runs: &mut Runs) -> Outcome {
    let m = ExperimentManifest::default_for(Scenario::Counterexample);
    let (r, dir, secs) = runs.run(&m);
    let res = &r["result"];
    let coh = get(res, "residuals.cohomological");
    let conj = get(res, "residuals.conjugacy");
    let predicted = golden_square().ln() / (2.0 + 3f64.sqrt()).ln();
    let exponent = get(res, "holder.exponent");
    let psi_err = read_plot(&dir.join("counterexample.psi.dat"))
        .iter()
        .map(|&(t, v)| (v - psi_series((t * 1024.0).round() as i64, 60)).abs())
        .fold(0.0, f64::max);
    let scales = read_plot(&dir.join("counterexample.difference_ratio.dat"));
    let ratio_at = |delta: f64| scales.iter().find(|s| s.0 == delta).unwrap().1;
    let growth = ratio_at(2f64.powi(-20)) / ratio_at(2f64.powi(-4));
    let parts = [
        coh < 1e-12 && get(res, "residuals.samples") == 1e4,
        conj < 1e-10,
        (exponent - predicted).abs() <= 0.05 && psi_err < 1e-12,
        growth > 1e3,
    ];
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    Outcome {
        pass: parts.iter().all(|&b| b) && secs < 120.0,
        detail: format!(
            "(a) {coh:.1e} < 1e-12 {}; (b) {conj:.1e} < 1e-10 {}; (c) exponent {exponent:.4} vs {predicted:.4} (series check {psi_err:.1e}) {}; (d) ratio growth {growth:.1} > 1e3 {}; {secs:.1}s < 120s",
            mark(parts[0]), mark(parts[1]), mark(parts[2]), mark(parts[3])
        ),
    }
}

// Criterion 3 -----------------------------------------------------------------

struct CatMap {
    eps: f64,
}

impl CatMap {
    fn r(&self, x: &[f64]) -> [f64; 2] {
        [self.eps * (std::f64::consts::TAU * x[1]).sin(), 0.0]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let r = self.r(x);
        vec![2.0 * x[0] + x[1] + r[0], x[0] + x[1] + r[1]]
    }

    fn inverse(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; 2];
        for _ in 0..100 {
            let r = self.r(&x);
            let (a, b) = (y[0] - r[0], y[1] - r[1]);
            x = vec![a - b, -a + 2.0 * b];
        }
        x
    }
}

fn wrapped(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.rem_euclid(1.0)).collect()
}

fn centered(v: f64) -> f64 {
    v - v.round()
}

/// h = H − Id from the two one-sided orbit sums along the eigenlines.
fn shadowing_oracle(f: &CatMap, x: &[f64], terms: usize) -> [f64; 2] {
    let lu = golden_square();
    let ls = 1.0 / lu;
    let norm = |v: [f64; 2]| {
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    };
    let eu = norm([1.0, lu - 2.0]);
    let es = [-eu[1], eu[0]];
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let (mut hu, mut hs) = (0.0, 0.0);
    let mut y = wrapped(x);
    for k in 0..terms {
        hu += lu.powi(-(k as i32 + 1)) * dot(eu, f.r(&y));
        y = wrapped(&f.apply(&y));
    }
    let mut z = wrapped(x);
    for k in 1..=terms {
        z = wrapped(&f.inverse(&z));
        hs -= ls.powi(k as i32 - 1) * dot(es, f.r(&z));
    }
    [hu * eu[0] + hs * es[0], hu * eu[1] + hs * es[1]]
}

fn conjugacy_checks() -> Value {
    let map = PerturbedMap::build(cat(), TrigPoly::sin_mode(2, 2, 0, &[0, 1], EPS)).unwrap();
    let cfg = ConjugacyConfig { grid: GRID, regularity: false, ..Default::default() };
    let start = Instant::now();
    let r = solve_conjugacy(&map, &cfg).unwrap();
    let solve_secs = start.elapsed().as_secs_f64();
    let f = CatMap { eps: EPS };
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let points: Vec<Vec<f64>> = (0..10_000).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let residual = points
        .iter()
        .map(|x| {
            let (hx, hfx) = (r.conj_at(&map, x).unwrap(), r.conj_at(&map, &wrapped(&f.apply(x))).unwrap());
            let lh = [2.0 * hx[0] + hx[1], hx[0] + hx[1]];
            centered(lh[0] - hfx[0]).abs().max(centered(lh[1] - hfx[1]).abs())
        })
        .fold(0.0, f64::max);
    let oracle = points[..100]
        .iter()
        .map(|x| {
            let (h, o) = (r.h_at(&map, x).unwrap(), shadowing_oracle(&f, x, 80));
            centered(h[0] - o[0]).abs().max(centered(h[1] - o[1]).abs())
        })
        .fold(0.0, f64::max);
    let (mut orbits, mut covariance, mut periodic_defect) = (0, 0.0f64, 0.0f64);
    for n in 1..=3 {
        let ln = cat().pow(n as i64).to_f64();
        for o in periodic_points(&map, n, 1000).unwrap().orbits {
            let mut y = o.point.clone();
            for _ in 0..n {
                y = f.apply(&y);
            }
            periodic_defect = (0..2).map(|i| centered(y[i] - o.point[i]).abs()).fold(periodic_defect, f64::max);
            let hp = DVector::from_column_slice(&r.conj_at(&map, &o.point).unwrap());
            let moved = &ln * &hp - &hp;
            covariance = moved.iter().map(|v| centered(*v).abs()).fold(covariance, f64::max);
            orbits += 1;
        }
    }
    json!({ "residual": residual, "oracle": oracle, "orbits": orbits, "covariance": covariance,
            "periodic_defect": periodic_defect, "solve_seconds": solve_secs })
}

fn criterion_3(runs: &mut Runs) -> Outcome {
    let (record, _, secs) = runs.run(&conjugate_manifest(EPS));
    let c = conjugacy_checks();
    let residual = get(&c, "residual");
    let oracle = get(&c, "oracle");
    let cov = get(&c, "covariance");
    let solve = get(&c, "solve_seconds");
    let orbits = c["orbits"].as_u64().unwrap();
    let stored = get(&record["result"], "conjugacy.residual");
    let pass = residual < 1e-9 && stored < 1e-9 && oracle < 1e-7 && cov < 1e-8 && get(&c, "periodic_defect") < 1e-10 && orbits == 22 && solve < 60.0 && secs < 60.0;
    Outcome {
        pass,
        detail: format!(
            "residual {residual:.1e} (record {stored:.1e}) < 1e-9; oracle {oracle:.1e} < 1e-7; covariance {cov:.1e} < 1e-8 over {orbits} orbits; solve {solve:.1}s, run {secs:.1}s < 60s"
        ),
    }
    .with_fingerprint(runs, "conjugacy", c)
}

impl Outcome {
    fn with_fingerprint(self, runs: &mut Runs, name: &str, v: Value) -> Self {
        let mut v = v;
        if let Some(o) = v.as_object_mut() {
            o.remove("solve_seconds");
        }
        fs::write(runs.root.join(format!("{name}.fingerprint.json")), v.to_string()).unwrap();
        self
    }
}

// Criterion 4 -----------------------------------------------------------------

fn scaling_table() -> Value {
    let family: Vec<ExperimentManifest> = [1e-4, 1e-3, 1e-2].iter().map(|&e| conjugate_manifest(e)).collect();
    serde_json::to_value(compare(&family).unwrap()).unwrap()
}

fn criterion_4(runs: &mut Runs) -> Outcome {
    let t = scaling_table();
    let rows = t["rows"].as_array().unwrap();
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (get(r, "eps"), get(r, "h_c0"))).collect();
    let ratios: Vec<f64> = pts.iter().map(|(e, h)| h / e).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let worst = ratios.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
    let logs: Vec<(f64, f64)> = pts.iter().map(|(e, h)| (e.ln(), h.ln())).collect();
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / 3.0, logs.iter().map(|p| p.1).sum::<f64>() / 3.0);
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let pass = rows.len() == 3 && worst <= 0.2 && (slope - 1.0).abs() <= 0.05;
    Outcome { pass, detail: format!("ratios {ratios:.4?}, max deviation {:.1}% <= 20%; slope {slope:.4} within 1 +- 0.05", 100.0 * worst) }
        .with_fingerprint(runs, "scaling", t)
}

// Criterion 5 -----------------------------------------------------------------

/// |det(Lⁿ − I)| for the cat map in exact integer arithmetic.
fn fixed_point_count(n: u32) -> i128 {
    let mut p = [[1i128, 0], [0, 1]];
    for _ in 0..n {
        p = [[2 * p[0][0] + p[0][1], p[0][0] + p[0][1]], [2 * p[1][0] + p[1][1], p[1][0] + p[1][1]]];
    }
    ((p[0][0] - 1) * (p[1][1] - 1) - p[0][1] * p[1][0]).abs()
}

fn periodic_summary() -> Value {
    let map = PerturbedMap::unperturbed(cat()).unwrap();
    let rows: Vec<Value> = (1..=3)
        .map(|n| {
            let s = periodic_points(&map, n, 1000).unwrap();
            let worst = s.orbits.iter().map(|o| o.residual).fold(0.0, f64::max);
            json!({ "n": n, "found": s.orbits.len(), "expected": fixed_point_count(n as u32), "residual": worst })
        })
        .collect();
    json!(rows)
}

fn criterion_5(runs: &mut Runs) -> Outcome {
    let s = periodic_summary();
    let rows = s.as_array().unwrap();
    let counts: Vec<u64> = rows.iter().map(|r| r["found"].as_u64().unwrap()).collect();
    let oracle: Vec<u64> = rows.iter().map(|r| r["expected"].as_u64().unwrap()).collect();
    let residual = rows.iter().map(|r| get(r, "residual")).fold(0.0, f64::max);
    let pass = counts == vec![1, 5, 16] && oracle == counts && residual < 1e-10;
    Outcome { pass, detail: format!("counts {counts:?}, exact oracle {oracle:?}; Newton residual {residual:.1e} < 1e-10") }
        .with_fingerprint(runs, "periodic", s)
}

// Criterion 6 -----------------------------------------------------------------

fn criterion_6(runs: &mut Runs) -> Outcome {
    let log_l = golden_square().ln();
    let mut linear = ExperimentManifest::default_for(Scenario::Lyapunov);
    linear.perturbation.clear();
    linear.eps = 1.0;
    linear.output.stem = Some("lyapunov-linear".into());
    let (r, _, _) = runs.run(&linear);
    let qr: Vec<f64> = r["result"]["qr"]["exponents"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let linear_err = (qr[0] - log_l).abs().max((qr[1] + log_l).abs());

    let mut perturbed = ExperimentManifest::default_for(Scenario::Lyapunov);
    perturbed.eps = EPS;
    perturbed.output.stem = Some("lyapunov-perturbed".into());
    let (r, _, _) = runs.run(&perturbed);
    let mean: Vec<f64> = r["result"]["volume"]["mean"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let volume_err = (mean[0] - log_l).abs().max((mean[1] + log_l).abs());

    let mut skew = ExperimentManifest::default_for(Scenario::Counterexample);
    skew.scenario = Scenario::Lyapunov;
    skew.output.stem = Some("lyapunov-counterexample".into());
    let (r, _, _) = runs.run(&skew);
    let log_m = (2.0 + 3f64.sqrt()).ln();
    let reference = [log_m, log_l, -log_l, -log_m];
    let reports = r["result"]["periodic"]["reports"].as_array().unwrap();
    let periodic_err = reports
        .iter()
        .map(|rep| {
            let e = rep["exponents"].as_array().unwrap();
            e.iter().zip(&reference).map(|(a, b)| (a.as_f64().unwrap() - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let pass = linear_err < 1e-8 && volume_err < 5e-3 && periodic_err < 1e-8 && reports.len() == 862;
    Outcome {
        pass,
        detail: format!(
            "f = L error {linear_err:.1e} < 1e-8; volume error {volume_err:.1e} < 5e-3; counterexample periodic error {periodic_err:.1e} < 1e-8 over all {} tested orbits (n <= 3)",
            reports.len()
        ),
    }
}

// Criterion 7 -----------------------------------------------------------------

fn random_real_poly(seed: u64, radius: i64, modes: usize) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = TrigPoly::zero(2, 2);
    for _ in 0..modes {
        let n = vec![rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius)];
        let c = (0..2).map(|_| num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        p.add_mode(n, c);
    }
    p.real_part()
}

/// max |L ĥ_m − ĥ_{(Lᵀ)⁻¹m} − Q̂_m| over m with m and its predecessor inside
/// the retained ball.
fn substitution_oracle(h: &TrigPoly, q: &TrigPoly, outer: i64) -> f64 {
    let within = |n: &[i64]| n.iter().all(|k| k.abs() <= outer);
    let mut modes: Vec<Vec<i64>> = h.iter().map(|(n, _)| n.clone()).chain(q.iter().map(|(n, _)| n.clone())).collect();
    modes.sort();
    modes.dedup();
    modes
        .iter()
        .filter(|m| within(m))
        .map(|m| {
            // (Lᵀ)⁻¹ = [[1, −1], [−1, 2]]
            let pred = vec![m[0] - m[1], -m[0] + 2 * m[1]];
            if !within(&pred) {
                return 0.0;
            }
            let (hm, hp, qm) = (h.coeff(m), h.coeff(&pred), q.coeff(m));
            let lh = [hm[0] * 2.0 + hm[1], hm[0] + hm[1]];
            (0..2).map(|i| (lh[i] - hp[i] - qm[i]).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn twisted_checks() -> Value {
    let l = cat();
    let q = random_real_poly(7, 8, 40);
    let sol = solve_linearized(&l, &q, 8, &LinearizedConfig::default()).unwrap();
    let direct = substitution_oracle(&sol.h, &q, sol.outer_radius);

    let g = random_real_poly(8, 4, 20);
    let twisted = g.map_values(&l.to_f64()).sub(&g.compose_affine(&l, &[0.0, 0.0]));
    let built = solve_linearized(&l, &twisted, twisted.radius(), &LinearizedConfig::default()).unwrap();
    let recovered = built.h.max_coeff_diff(&g);
    let constructed = substitution_oracle(&built.h, &twisted, built.outer_radius);
    json!({ "q_radius": q.radius(), "direct": direct, "recovered": recovered, "constructed": constructed })
}

fn criterion_7(runs: &mut Runs) -> Outcome {
    let c = twisted_checks();
    let (direct, recovered, constructed) = (get(&c, "direct"), get(&c, "recovered"), get(&c, "constructed"));
    let pass = c["q_radius"].as_i64().unwrap() <= 8 && direct < 1e-12 && recovered < 1e-12 && constructed < 1e-12;
    Outcome {
        pass,
        detail: format!("|n| <= 8 substitution {direct:.1e} < 1e-12; constructed case recovers g to {recovered:.1e}, substitution {constructed:.1e} < 1e-12"),
    }
    .with_fingerprint(runs, "twisted", c)
}

// Criterion 8 -----------------------------------------------------------------

fn criterion_8(runs: &mut Runs) -> Outcome {
    let mut m = ExperimentManifest::default_for(Scenario::Kam);
    m.eps = EPS;
    m.numerics.grid = GRID;
    m.numerics.radius = 16;
    m.numerics.kam_steps = 2;
    let (r, _, _) = runs.run(&m);
    let kam = &r["result"]["kam"];
    let d: Vec<f64> = kam["distances"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let steps = kam["steps"].as_array().unwrap();
    let telemetry = steps.iter().all(|s| {
        ["orientation", "trials", "no_improvement", "q_c0", "h_prime_c0", "linearized_residual", "tail_bound", "ratio_c0"]
            .iter()
            .all(|k| !s[*k].is_null())
    });
    let orientations: Vec<String> = steps
        .iter()
        .map(|s| {
            let trials: Vec<String> = s["trials"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| format!("{}={:.1e}", t["orientation"].as_str().unwrap(), get(t, "c0")))
                .collect();
            trials.join("/")
        })
        .collect();
    let pass = d.len() == 3 && (d[0] - EPS).abs() < 1e-15 && d[1] <= 0.5 * d[0] && d[2] < d[1] && telemetry;
    Outcome { pass, detail: format!("distances {}; trials {orientations:?}; telemetry {}", d.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" -> "), if telemetry { "complete" } else { "missing" }) }
}

// Criterion 9 -----------------------------------------------------------------

fn random_conjugator(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let c = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let s = c.clone().svd(false, false).singular_values;
        if s[1] > 0.0 && s[0] / s[1] <= 10.0 {
            return c;
        }
    }
}

fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

/// Mixture of conformal and non-conformal classes under random similarity.
fn random_sample(rng: &mut ChaCha8Rng) -> (usize, DMatrix<f64>) {
    let class = rng.gen_range(0..5);
    let r = rng.gen_range(0.3..3.0);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let base = match class {
        0 => rotation(rng.gen_range(0.1..std::f64::consts::PI - 0.1)) * r,
        1 => {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), t.sin(), -t.cos()]) * r
        }
        2 => DMatrix::identity(2, 2) * (sign * r),
        3 => {
            let s = rng.gen_range(1.5..4.0);
            let s = if rng.gen_bool(0.5) { s } else { 1.0 / s };
            DMatrix::from_row_slice(2, 2, &[sign * r, 0.0, 0.0, if rng.gen_bool(0.5) { r * s } else { -r * s }])
        }
        _ => DMatrix::from_row_slice(2, 2, &[1.0, rng.gen_range(0.5..2.0), 0.0, 1.0]) * (sign * r),
    };
    let c = random_conjugator(rng);
    let ci = c.clone().try_inverse().unwrap();
    (class, &c * base * ci)
}

/// Relative distance of T⁻¹MT to the conformal matrices, T = [[1, t], [0, eˢ]].
/// Every conjugator factors as T times an orthogonal matrix, which preserves
/// the conformal set, so T ranges over all similarity classes.
fn conformal_distance(m: &DMatrix<f64>, p: [f64; 2]) -> f64 {
    let (t, s) = (p[0], p[1].exp());
    let tm = DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, s]);
    let sv = tm.clone().svd(false, false).singular_values;
    let cond = sv[0] / sv[1];
    if cond > 1e3 {
        return 1e3 + cond;
    }
    let ti = DMatrix::from_row_slice(2, 2, &[1.0, -t / s, 0.0, 1.0 / s]);
    let x = ti * m * tm;
    let (a, b, c, d) = (x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
    let rot = (((a - d).powi(2) + (b + c).powi(2)) / 2.0).sqrt();
    let refl = (((a + d).powi(2) + (c - b).powi(2)) / 2.0).sqrt();
    rot.min(refl) / m.norm()
}

fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], step: f64) -> f64 {
    let mut s: Vec<([f64; 2], f64)> =
        [start, [start[0] + step, start[1]], [start[0], start[1] + step]].iter().map(|&p| (p, f(p))).collect();
    for _ in 0..2000 {
        s.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (s[2].1 - s[0].1).abs() <= 1e-18 && (s[2].0[0] - s[0].0[0]).abs() + (s[2].0[1] - s[0].0[1]).abs() < 1e-14 {
            break;
        }
        let c = [(s[0].0[0] + s[1].0[0]) / 2.0, (s[0].0[1] + s[1].0[1]) / 2.0];
        let at = |k: f64| [c[0] + k * (s[2].0[0] - c[0]), c[1] + k * (s[2].0[1] - c[1])];
        let (xr, fr) = (at(-1.0), f(at(-1.0)));
        if fr < s[0].1 {
            let xe = at(-2.0);
            let fe = f(xe);
            s[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < s[1].1 {
            s[2] = (xr, fr);
        } else {
            let xc = if fr < s[2].1 { at(-0.5) } else { at(0.5) };
            let fc = f(xc);
            if fc < s[2].1.min(fr) {
                s[2] = (xc, fc);
            } else {
                let best = s[0].0;
                for v in s.iter_mut().skip(1) {
                    v.0 = [(v.0[0] + best[0]) / 2.0, (v.0[1] + best[1]) / 2.0];
                    v.1 = f(v.0);
                }
            }
        }
    }
    s.iter().map(|v| v.1).fold(f64::INFINITY, f64::min)
}

fn brute_force_verdict(m: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> (Conformality, f64) {
    let f = |p: [f64; 2]| conformal_distance(m, p);
    let mut best = nelder_mead(&f, [0.0, 0.0], 0.5);
    for _ in 0..40 {
        let start = [rng.gen_range(-10.0..10.0), rng.gen_range(-5.0..5.0)];
        best = best.min(nelder_mead(&f, start, rng.gen_range(0.1..2.0)));
    }
    let verdict = if best <= 1e-8 {
        Conformality::Conformal
    } else if best >= 1e-6 {
        Conformality::NotConformal
    } else {
        Conformality::Indeterminate
    };
    (verdict, best)
}

fn conformality_sweep() -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0f0);
    let mut search = ChaCha8Rng::seed_from_u64(0x5ea5);
    let rows: Vec<Value> = (0..100)
        .map(|_| {
            let (class, m) = random_sample(&mut rng);
            let tool = conformality_of(&m).verdict;
            let (oracle, distance) = brute_force_verdict(&m, &mut search);
            json!({ "class": class, "tool": tool, "oracle": oracle, "distance": distance })
        })
        .collect();
    json!(rows)
}

fn criterion_9(runs: &mut Runs) -> Outcome {
    let sweep = conformality_sweep();
    let rows = sweep.as_array().unwrap();
    let undecided = |r: &Value| r["tool"] == "indeterminate" || r["oracle"] == "indeterminate";
    let indeterminate = rows.iter().filter(|r| undecided(r)).count();
    let disagreements = rows.iter().filter(|r| !undecided(r) && r["tool"] != r["oracle"]).count();
    let mut per_class: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for r in rows {
        let e = per_class.entry(r["class"].as_u64().unwrap()).or_default();
        e.0 += 1;
        e.1 += usize::from(r["oracle"] == "conformal");
    }
    let pass = rows.len() == 100 && disagreements == 0 && indeterminate <= 2;
    Outcome {
        pass,
        detail: format!("{disagreements} disagreements, {indeterminate}/100 indeterminate <= 2; (samples, conformal) per class {per_class:?}"),
    }
    .with_fingerprint(runs, "conformality", sweep)
}

// Criterion 10 ----------------------------------------------------------------

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".timings.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn criterion_10(runs: &mut Runs) -> Outcome {
    let mut mismatches = vec![];
    for (k, (m, first)) in runs.done.iter().enumerate() {
        let again = runs.root.join(format!("second-{k}"));
        let out = run(m, &again);
        if out.exit_code != EXIT_OK || files(first) != files(&again) {
            mismatches.push(m.stem());
        }
    }
    let direct: [(&str, fn() -> Value); 6] = [
        ("conjugacy", || {
            let mut v = conjugacy_checks();
            v.as_object_mut().unwrap().remove("solve_seconds");
            v
        }),
        ("scaling", scaling_table),
        ("periodic", periodic_summary),
        ("twisted", twisted_checks),
        ("conformality", conformality_sweep),
        ("lattice", lattice_sweep),
    ];
    let lattice_first = lattice_sweep().to_string();
    for (name, f) in direct {
        let stored = if name == "lattice" {
            lattice_first.clone()
        } else {
            fs::read_to_string(runs.root.join(format!("{name}.fingerprint.json"))).unwrap()
        };
        if f().to_string() != stored {
            mismatches.push(name.to_string());
        }
    }
    let total = runs.done.len() + direct.len();
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!("{} of {total} suites reproduced bitwise{}", total - mismatches.len(), if mismatches.is_empty() { String::new() } else { format!("; differing: {mismatches:?}") }),
    }
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let mut runs = Runs { root: root.path().to_path_buf(), done: vec![] };
    let criteria: [(u8, fn(&mut Runs) -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = vec![];
    for (k, check) in criteria {
        let start = Instant::now();
        let o = check(&mut runs);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k}: {verdict}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
