use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rigidity_core::torus::TrigPoly;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Classify,
    Conjugate,
    Counterexample,
    Linearized,
    Kam,
    Lyapunov,
    Cocycle,
    Regularity,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Classify => "classify",
            Scenario::Conjugate => "conjugate",
            Scenario::Counterexample => "counterexample",
            Scenario::Linearized => "linearized",
            Scenario::Kam => "kam",
            Scenario::Lyapunov => "lyapunov",
            Scenario::Cocycle => "cocycle",
            Scenario::Regularity => "regularity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wave {
    Sin,
    Cos,
}

/// One real Fourier mode `amplitude · wave(2π⟨freq, x⟩)` in one component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub component: usize,
    pub freq: Vec<i64>,
    pub wave: Wave,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Grid points per axis.
    pub grid: usize,
    /// Fourier truncation radius.
    pub radius: i64,
    pub tol: f64,
    /// Iteration count (cocycle steps, Lyapunov run length).
    pub steps: usize,
    pub seed: u64,
    /// Random evaluation points for residuals.
    pub samples: usize,
    /// Series terms in the skew-product construction.
    pub terms: usize,
    /// Periods searched for periodic orbits.
    pub periods: Vec<usize>,
    pub kam_steps: usize,
    /// Grid per axis for volume-sampled exponents and bunching.
    pub volume_grid: usize,
    /// Lyapunov cluster (0 = most expanding) for restricted cocycles.
    pub cluster: Option<usize>,
    pub beta: Option<f64>,
    pub holder_pairs: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            grid: 128,
            radius: 16,
            tol: 1e-11,
            steps: 2000,
            seed: 0,
            samples: 10_000,
            terms: 60,
            periods: vec![1, 2, 3],
            kam_steps: 3,
            volume_grid: 8,
            cluster: None,
            beta: None,
            holder_pairs: 10_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Used when neither the command line nor the environment names a directory.
    pub dir: Option<String>,
    /// File stem of every artifact; the scenario name when absent.
    pub stem: Option<String>,
}

/// Everything a run depends on. Two runs of equal manifests produce
/// byte-identical result files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    #[serde(default = "schema_version")]
    pub schema: u32,
    pub scenario: Scenario,
    /// L, or A for the skew product.
    pub matrix: Vec<Vec<i64>>,
    /// B of the skew product (x, y) ↦ (Ax + φ(y)v, By); absent for plain maps.
    #[serde(default)]
    pub base_matrix: Option<Vec<Vec<i64>>>,
    /// Unscaled shape of the perturbation (of φ for the skew product).
    #[serde(default)]
    pub perturbation: Vec<Mode>,
    /// Scale applied to every mode amplitude.
    #[serde(default = "unit")]
    pub eps: f64,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSpec,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn unit() -> f64 {
    1.0
}

fn cat() -> Vec<Vec<i64>> {
    vec![vec![2, 1], vec![1, 1]]
}

impl ExperimentManifest {
    /// The standard setup of each scenario on the cat map.
    pub fn default_for(scenario: Scenario) -> Self {
        let mut m = Self {
            schema: SCHEMA_VERSION,
            scenario,
            matrix: cat(),
            base_matrix: None,
            perturbation: vec![Mode { component: 0, freq: vec![0, 1], wave: Wave::Sin, amplitude: 1.0 }],
            eps: 1e-3,
            numerics: Numerics::default(),
            output: OutputSpec::default(),
        };
        match scenario {
            Scenario::Classify => {
                m.perturbation.clear();
                m.eps = 1.0;
            }
            Scenario::Counterexample => {
                m.base_matrix = Some(vec![vec![3, 1], vec![2, 1]]);
                m.perturbation = vec![Mode { component: 0, freq: vec![1, 0], wave: Wave::Sin, amplitude: 1.0 }];
                m.eps = 0.01;
            }
            Scenario::Kam => m.numerics.grid = 256,
            _ => {}
        }
        m
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: Self = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Hex SHA-256 of the compact serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.scenario.name().to_string())
    }

    pub fn is_skew_product(&self) -> bool {
        self.base_matrix.is_some()
    }

    /// Dimension of the torus the perturbation lives on.
    fn perturbation_dim(&self) -> usize {
        if self.is_skew_product() { 2 } else { self.matrix.len() }
    }

    fn perturbation_range(&self) -> usize {
        if self.is_skew_product() { 1 } else { self.matrix.len() }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Schema(msg));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.schema));
        }
        check_square(&self.matrix, "matrix")?;
        if let Some(b) = &self.base_matrix {
            check_square(b, "base_matrix")?;
            if self.matrix.len() != 2 || b.len() != 2 {
                return bad("skew product needs 2x2 matrix and base_matrix".into());
            }
        } else if self.scenario == Scenario::Counterexample {
            return bad("counterexample needs base_matrix".into());
        }
        let (dim, range) = (self.perturbation_dim(), self.perturbation_range());
        for (i, mode) in self.perturbation.iter().enumerate() {
            if mode.freq.len() != dim {
                return bad(format!("perturbation[{i}].freq has length {}, expected {dim}", mode.freq.len()));
            }
            if mode.component >= range {
                return bad(format!("perturbation[{i}].component {} out of range {range}", mode.component));
            }
            if !mode.amplitude.is_finite() {
                return bad(format!("perturbation[{i}].amplitude is not finite"));
            }
        }
        if !self.eps.is_finite() {
            return bad("eps is not finite".into());
        }
        let n = &self.numerics;
        if n.grid < 4 || n.volume_grid < 1 {
            return bad("grid must be at least 4 and volume_grid at least 1".into());
        }
        if n.radius < 1 {
            return bad("radius must be positive".into());
        }
        if !(n.tol > 0.0 && n.tol.is_finite()) {
            return bad("tol must be positive".into());
        }
        if n.steps == 0 || n.samples == 0 || n.holder_pairs == 0 {
            return bad("steps, samples and holder_pairs must be positive".into());
        }
        if n.periods.iter().any(|&p| p == 0) {
            return bad("periods must be positive".into());
        }
        if let Some(b) = n.beta {
            if !(b > 0.0 && b <= 1.0) {
                return bad("beta must lie in (0, 1]".into());
            }
        }
        if let Some(stem) = &self.output.stem {
            if stem.is_empty() || stem.contains(['/', '\\']) {
                return bad("output.stem must be a plain file name".into());
            }
        }
        Ok(())
    }

    /// ε·Σ modes as a trigonometric polynomial.
    pub fn perturbation_poly(&self) -> TrigPoly {
        let (dim, range) = (self.perturbation_dim(), self.perturbation_range());
        self.perturbation.iter().fold(TrigPoly::zero(dim, range), |acc, m| {
            let a = self.eps * m.amplitude;
            let term = match m.wave {
                Wave::Sin => TrigPoly::sin_mode(dim, range, m.component, &m.freq, a),
                Wave::Cos => TrigPoly::cos_mode(dim, range, m.component, &m.freq, a),
            };
            acc.add(&term)
        })
    }

    /// Same experiment up to ε and output location.
    pub fn differs_only_in_eps(&self, other: &Self) -> bool {
        let strip = |m: &Self| {
            let mut m = m.clone();
            m.eps = 0.0;
            m.output = OutputSpec::default();
            m
        };
        strip(self) == strip(other)
    }
}

fn check_square(m: &[Vec<i64>], name: &str) -> Result<(), CliError> {
    if m.is_empty() || m.iter().any(|r| r.len() != m.len()) {
        return Err(CliError::Schema(format!("{name} must be a non-empty square matrix")));
    }
    Ok(())
}
