//! Manifest-driven experiment runner. Each run writes a JSON results record
//! carrying a provenance block, optional two-column plot files, and a
//! timings sidecar kept apart so results stay byte-identical across reruns.

mod compare;
mod manifest;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};

use thiserror::Error;

use rigidity_core::Error as CoreError;

pub use compare::{compare, write_table as write_compare, CompareRow, CompareTable, KamColumn};
pub use manifest::{ExperimentManifest, Mode, Numerics, OutputSpec, Scenario, Wave, SCHEMA_VERSION};
pub use output::{Plot, Provenance, RunOutcome};
pub use scenarios::{execute, Artifacts, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

pub const OUT_DIR_ENV: &str = "RIGIDITY_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("incomparable manifests: {0}")]
    IncomparableManifests(String),

    #[error("{scenario}: {source}")]
    Core { scenario: &'static str, source: CoreError },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::IncomparableManifests(_) => EXIT_SCHEMA,
            CliError::Io(_) => EXIT_IO,
            CliError::Core { source, .. } => core_exit_code(source),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::IncomparableManifests(_) => "incomparable_manifests",
            CliError::Core { source, .. } if core_exit_code(source) == EXIT_INCONCLUSIVE => "inconclusive",
            CliError::Core { source, .. } if core_exit_code(source) == EXIT_SCHEMA => "invalid_input",
            CliError::Core { .. } => "numerical_failure",
            CliError::Io(_) => "io",
        }
    }
}

/// Rejected inputs map to the schema code, undecidable verdicts to
/// inconclusive, everything else to numerical failure.
pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::InvalidInput(_) | CoreError::NotUnimodular(_) | CoreError::NotHyperbolic | CoreError::OrderViolation { .. } => {
            EXIT_SCHEMA
        }
        CoreError::Indeterminate(_)
        | CoreError::VerificationInconclusive(_)
        | CoreError::GapTooSmall { .. }
        | CoreError::UnreliableFit { .. } => EXIT_INCONCLUSIVE,
        CoreError::DegreeTooLarge { .. }
        | CoreError::ConvergenceFailure { .. }
        | CoreError::NewtonDivergence { .. }
        | CoreError::NoContraction { .. }
        | CoreError::ToleranceNotReached { .. }
        | CoreError::TruncationInsufficient { .. }
        | CoreError::SingularGenerator { .. }
        | CoreError::LostOrthogonality(_) => EXIT_NUMERICAL,
    }
}

/// Output directory by precedence: explicit, environment, manifest, `results`.
pub fn resolve_out_dir(explicit: Option<&Path>, manifest: &ExperimentManifest) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| manifest.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Executes the scenario and writes its artifacts under `out_dir`. A failed
/// run still leaves a record describing the failure.
pub fn run(manifest: &ExperimentManifest, out_dir: &Path) -> RunOutcome {
    output::run_and_write(manifest, out_dir)
}
