//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |M - M†| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error(
        "near-degenerate coupled pair |{p}⟩, |{q}⟩: |E_p - E_q| = {gap:.3e} rad/s \
         with coupling {coupling:.3e} rad/s"
    )]
    Degeneracy {
        p: usize,
        q: usize,
        gap: f64,
        coupling: f64,
    },

    #[error("ambiguous dressed-state labels: eigenstates {k1} and {k2} both map to bare |{label}⟩")]
    AmbiguousLabel { k1: usize, k2: usize, label: usize },

    #[error("denominator factor {name} = {value:.3e} rad/s is within {threshold:.3e} of a pole")]
    PoleProximity {
        name: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("calibration failure in {what}: {detail}")]
    Calibration { what: &'static str, detail: String },

    #[error("no significant oscillation in trace (spectral SNR {snr:.2} < 3)")]
    NoOscillation { snr: f64 },

    #[error("trace spans only {periods:.2} oscillation periods (need at least 2)")]
    TraceTooShort { periods: f64 },

    #[error("step size {dt:.3e} s exceeds limit {limit:.3e} s (min segment duration / 10)")]
    StepSize { dt: f64, limit: f64 },

    #[error("design matrix is rank-deficient; null directions: {}", directions.join(", "))]
    RankDeficient { directions: Vec<String> },

    #[error("{what}: optimizer did not converge after {iters} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence {
        what: &'static str,
        iters: usize,
        grad_norm: f64,
    },

    #[error("single-qubit gate calibration failed: leakage {leakage:.4e} exceeds 1%")]
    Leakage { leakage: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown scenario '{name}'; valid scenarios: {valid}")]
    UnknownScenario { name: String, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 calibration, 4 estimation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownScenario { .. } | Error::Io(_) => 2,
            Error::Calibration { .. }
            | Error::PoleProximity { .. }
            | Error::Degeneracy { .. }
            | Error::AmbiguousLabel { .. }
            | Error::Leakage { .. } => 3,
            _ => 4,
        }
    }
}
