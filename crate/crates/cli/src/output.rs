use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::ExperimentManifest;
use crate::scenarios::{execute, Status};
use crate::{CliError, EXIT_INCONCLUSIVE, EXIT_OK};

/// Two-column plot data.
#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub name: String,
    pub columns: [String; 2],
    pub rows: Vec<(f64, f64)>,
}

impl Plot {
    pub fn new(name: &str, x: &str, y: &str, rows: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), columns: [x.into(), y.into()], rows }
    }

    pub(crate) fn render(&self, hash: &str) -> String {
        let mut s = format!("# manifest_sha256 {hash}\n# {} {}\n", self.columns[0], self.columns[1]);
        for (x, y) in &self.rows {
            writeln!(s, "{x:e} {y:e}").unwrap();
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub manifest_sha256: String,
    pub scenario: &'static str,
    pub seed: u64,
    /// Wall-clock timings live in the sidecar named here.
    pub timings_file: String,
    pub manifest: ExperimentManifest,
}

impl Provenance {
    pub fn of(manifest: &ExperimentManifest) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            manifest_sha256: manifest.hash(),
            scenario: manifest.scenario.name(),
            seed: manifest.numerics.seed,
            timings_file: format!("{}.timings.json", manifest.stem()),
            manifest: manifest.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub record: PathBuf,
    pub plots: Vec<PathBuf>,
    pub message: Option<String>,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

pub(crate) fn run_and_write(manifest: &ExperimentManifest, out_dir: &Path) -> RunOutcome {
    let stem = manifest.stem();
    let record = out_dir.join(format!("{stem}.json"));
    let io_failure = |e: CliError| RunOutcome { exit_code: e.exit_code(), record: record.clone(), plots: vec![], message: Some(e.to_string()) };
    if let Err(e) = fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display()))) {
        return io_failure(e);
    }
    let prov = Provenance::of(manifest);
    let start = Instant::now();
    let result = manifest.validate().and_then(|_| execute(manifest));
    let elapsed = start.elapsed().as_secs_f64();

    let (body, plots, exit_code, message) = match result {
        Ok(a) => {
            let (status, code, msg) = match &a.status {
                Status::Ok => ("ok", EXIT_OK, None),
                Status::Inconclusive(why) => ("inconclusive", EXIT_INCONCLUSIVE, Some(why.clone())),
            };
            let body = json!({ "provenance": prov, "status": status, "reason": msg, "result": a.result });
            (body, a.plots, code, msg)
        }
        Err(e) => {
            let body = json!({
                "provenance": prov,
                "status": "error",
                "error": { "kind": e.kind(), "exit_code": e.exit_code(), "message": e.to_string() },
            });
            (body, vec![], e.exit_code(), Some(e.to_string()))
        }
    };
    let mut written = vec![];
    let hash = prov.manifest_sha256.as_str();
    let mut io = write(&record, &to_pretty(&body));
    for p in &plots {
        let path = out_dir.join(format!("{stem}.{}.dat", p.name));
        io = io.and_then(|_| write(&path, &p.render(hash)));
        written.push(path);
    }
    let timings = json!({ "manifest_sha256": hash, "elapsed_seconds": elapsed });
    io = io.and_then(|_| write(&out_dir.join(&prov.timings_file), &to_pretty(&timings)));
    if let Err(e) = io {
        return io_failure(e);
    }
    RunOutcome { exit_code, record, plots: written, message }
}
