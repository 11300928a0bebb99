use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use rigidity_core::conjugacy::solve_conjugacy;
use rigidity_core::twisted::kam_iterate;

use crate::manifest::{ExperimentManifest, Scenario};
use crate::output::{to_pretty, Plot};
use crate::scenarios::{conjugacy_config, kam_config, system};
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub eps: f64,
    pub h_c0: f64,
    pub dh_c0: f64,
    /// ‖h‖_{C⁰}/ε.
    pub ratio: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KamColumn {
    pub eps: f64,
    pub distances: Vec<f64>,
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareTable {
    pub scenario: Scenario,
    pub manifest_sha256: Vec<String>,
    pub rows: Vec<CompareRow>,
    /// Least-squares slope of log ‖h‖_{C⁰} against log ε.
    pub slope: Option<f64>,
    /// (max − min)/mean of the ratio column.
    pub ratio_spread: Option<f64>,
    pub kam: Vec<KamColumn>,
}

fn check(manifests: &[ExperimentManifest]) -> Result<(), CliError> {
    let fail = |msg: &str| Err(CliError::IncomparableManifests(msg.into()));
    if manifests.len() < 2 {
        return fail("need at least two manifests");
    }
    let first = &manifests[0];
    if !matches!(first.scenario, Scenario::Conjugate | Scenario::Regularity | Scenario::Kam) {
        return fail("only conjugate, regularity and kam families have a scaling table");
    }
    if manifests.iter().any(|m| !first.differs_only_in_eps(m)) {
        return fail("manifests differ in more than eps");
    }
    let mut eps: Vec<f64> = manifests.iter().map(|m| m.eps.abs()).collect();
    eps.sort_by(f64::total_cmp);
    if eps[0] == 0.0 || eps.windows(2).any(|w| w[0] == w[1]) {
        return fail("eps values must be nonzero and distinct");
    }
    for m in manifests {
        m.validate()?;
    }
    Ok(())
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs a family of manifests that differ only in ε, in increasing ε.
pub fn compare(manifests: &[ExperimentManifest]) -> Result<CompareTable, CliError> {
    check(manifests)?;
    let mut family = manifests.to_vec();
    family.sort_by(|a, b| a.eps.abs().total_cmp(&b.eps.abs()));
    let scenario = family[0].scenario;
    let ctx = |source| CliError::Core { scenario: "compare", source };
    let mut rows = vec![];
    let mut kam = vec![];
    for m in &family {
        let sys = system(m)?;
        if scenario == Scenario::Kam {
            let run = kam_iterate(&sys.map, m.numerics.kam_steps, &conjugacy_config(m, false), &kam_config(m)).map_err(ctx)?;
            kam.push(KamColumn { eps: m.eps, distances: run.distances, monotone: run.monotone });
        } else {
            let r = solve_conjugacy(&sys.map, &conjugacy_config(m, false)).map_err(ctx)?;
            let eps = m.eps.abs();
            rows.push(CompareRow { eps, h_c0: r.metrics.h_c0, dh_c0: r.metrics.dh_c0, ratio: r.metrics.h_c0 / eps, residual: r.residual });
        }
    }
    let (slope, ratio_spread) = if rows.is_empty() {
        (None, None)
    } else {
        let logs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps.ln(), r.h_c0.ln())).collect();
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = (ratios.iter().cloned().fold(f64::MIN, f64::max) - ratios.iter().cloned().fold(f64::MAX, f64::min)) / mean;
        (Some(fit_slope(&logs)), Some(spread))
    };
    Ok(CompareTable { scenario, manifest_sha256: family.iter().map(ExperimentManifest::hash).collect(), rows, slope, ratio_spread, kam })
}

/// Writes `compare.json` and its plot data.
pub fn write_table(table: &CompareTable, out_dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(io)?;
    let body = json!({ "provenance": { "tool": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION"),
        "manifest_sha256": table.manifest_sha256 }, "status": "ok", "result": table });
    fs::write(out_dir.join("compare.json"), to_pretty(&body)).map_err(io)?;
    let joined = table.manifest_sha256.join(",");
    let plot = if table.rows.is_empty() {
        let rows = table.kam.iter().flat_map(|c| c.distances.iter().enumerate().map(|(k, &d)| (k as f64, d))).collect();
        Plot::new("kam_distance", "step", "c0_distance", rows)
    } else {
        Plot::new("scaling", "eps", "h_c0", table.rows.iter().map(|r| (r.eps, r.h_c0)).collect())
    };
    fs::write(out_dir.join(format!("compare.{}.dat", plot.name)), plot.render(&joined)).map_err(io)
}
