use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rigidity_cli::{compare, resolve_out_dir, run, CliError, ExperimentManifest, Scenario, EXIT_OK, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "rigidity", version, about = "Reproducible experiments on perturbed toral automorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral classification of the matrix (and cone test of the map).
    Classify(RunArgs),
    /// Solve L∘H = H∘f on a grid.
    Conjugate(RunArgs),
    /// Skew-product example with a Hölder but non-Lipschitz conjugacy.
    Counterexample(RunArgs),
    /// Linearized twisted equation on dual orbits.
    Linearized(RunArgs),
    /// Iterated KAM steps with distance telemetry.
    Kam(RunArgs),
    /// Lyapunov exponents of the derivative cocycle.
    Lyapunov(RunArgs),
    /// Bunching, conformality and Oseledets diagnostics.
    Cocycle(RunArgs),
    /// Hölder and Sobolev diagnostics of H and DH.
    Regularity(RunArgs),
    /// Scaling table over manifests differing only in eps.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON manifest; the scenario's standard setup when absent.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Square integer matrix, rows separated by ';' (e.g. "2,1;1,1").
    #[arg(long)]
    matrix: Option<String>,
    /// Grid points per axis (N).
    #[arg(short = 'N', long)]
    grid: Option<usize>,
    /// Fourier truncation radius (F).
    #[arg(short = 'F', long)]
    radius: Option<i64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Perturbation size (ε).
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Iteration count (n).
    #[arg(short = 'n', long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Print the resolved manifest and exit.
    #[arg(long)]
    print_manifest: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

fn read_manifest(path: &PathBuf) -> Result<ExperimentManifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ExperimentManifest::from_json(&text)
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<i64>>, CliError> {
    text.split(';')
        .map(|row| row.split(',').map(|v| v.trim().parse::<i64>()).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Schema(format!("matrix '{text}': {e}")))
}

fn resolve(scenario: Scenario, args: &RunArgs) -> Result<ExperimentManifest, CliError> {
    let mut m = match &args.manifest {
        Some(p) => read_manifest(p)?,
        None => ExperimentManifest::default_for(scenario),
    };
    if m.scenario != scenario {
        return Err(CliError::Schema(format!("manifest scenario is '{}', not '{}'", m.scenario.name(), scenario.name())));
    }
    if let Some(t) = &args.matrix {
        m.matrix = parse_matrix(t)?;
    }
    let n = &mut m.numerics;
    n.grid = args.grid.unwrap_or(n.grid);
    n.radius = args.radius.unwrap_or(n.radius);
    n.tol = args.tol.unwrap_or(n.tol);
    n.steps = args.steps.unwrap_or(n.steps);
    n.seed = args.seed.unwrap_or(n.seed);
    m.eps = args.eps.unwrap_or(m.eps);
    m.validate()?;
    Ok(m)
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("rigidity: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Classify(a) => (Scenario::Classify, a),
        Command::Conjugate(a) => (Scenario::Conjugate, a),
        Command::Counterexample(a) => (Scenario::Counterexample, a),
        Command::Linearized(a) => (Scenario::Linearized, a),
        Command::Kam(a) => (Scenario::Kam, a),
        Command::Lyapunov(a) => (Scenario::Lyapunov, a),
        Command::Cocycle(a) => (Scenario::Cocycle, a),
        Command::Regularity(a) => (Scenario::Regularity, a),
        Command::Compare(c) => {
            let family = match c.manifests.iter().map(read_manifest).collect::<Result<Vec<_>, _>>() {
                Ok(f) => f,
                Err(e) => return fail(&e),
            };
            let out = c.out.or_else(|| family[0].output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| "results".into());
            return match compare(&family).and_then(|t| rigidity_cli::write_compare(&t, &out).map(|_| t)) {
                Ok(t) => {
                    println!("compare: {} rows, slope {:?}, written to {}", t.rows.len().max(t.kam.len()), t.slope, out.display());
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(&e),
            };
        }
    };
    let manifest = match resolve(scenario, &args) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    if args.print_manifest {
        println!("{}", manifest.to_json());
        return ExitCode::from(EXIT_OK as u8);
    }
    let outcome = run(&manifest, &resolve_out_dir(args.out.as_deref(), &manifest));
    println!("{}: exit {} record {}", scenario.name(), outcome.exit_code, outcome.record.display());
    if let Some(msg) = &outcome.message {
        eprintln!("rigidity: {msg}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
