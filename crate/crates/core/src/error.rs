use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not invertible over the integers (determinant {0})")]
    NotUnimodular(String),

    #[error("polynomial degree {degree} exceeds the factorization bound {bound}")]
    DegreeTooLarge { degree: usize, bound: usize },

    #[error("root iteration did not converge (max residual {max_residual:e})")]
    ConvergenceFailure { max_residual: f64 },

    #[error("spectral decision indeterminate: {0}")]
    Indeterminate(String),

    #[error("automorphism is not hyperbolic")]
    NotHyperbolic,

    #[error("cone verification inconclusive: {0}")]
    VerificationInconclusive(String),

    #[error("Newton iteration diverged at {point:?}")]
    NewtonDivergence { point: Vec<f64> },

    #[error("iteration is not contracting (observed ratio {ratio})")]
    NoContraction { ratio: f64 },

    #[error("tolerance {tol:e} not reached after {iterations} sweeps (last difference {last:e})")]
    ToleranceNotReached { tol: f64, iterations: usize, last: f64 },

    #[error("counterexample needs mu > lambda > 1 (lambda = {lambda}, mu = {mu})")]
    OrderViolation { lambda: f64, mu: f64 },

    #[error("truncation tail bound {tail:e} exceeds tolerance {tol:e}")]
    TruncationInsufficient { tail: f64, tol: f64 },

    #[error("singular generator at {point:?}")]
    SingularGenerator { point: Vec<f64> },

    #[error("QR frame lost orthogonality (deviation {0:e})")]
    LostOrthogonality(f64),

    #[error("exponent gap {gap:e} is below twice the oscillation {oscillation:e}")]
    GapTooSmall { gap: f64, oscillation: f64 },

    #[error("Hölder fit unreliable (log-log residual {residual:e}, slope {slope})")]
    UnreliableFit { residual: f64, slope: f64 },
}
