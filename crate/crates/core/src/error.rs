use thiserror::Error;

use crate::simplex::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("equilibrium solver did not converge after {iterations} iterations (gradient norm {gradient:e})")]
    EquilibriumNotConverged { iterations: usize, gradient: f64 },

    #[error("zigzag instability: transverse mode {mode} has curvature {eigenvalue:e}")]
    ZigzagInstability { mode: usize, eigenvalue: f64 },

    #[error("degenerate mode spectrum: minimum gap {gap:e}")]
    DegenerateSpectrum { gap: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("length {0} is not a triangular number n(n-1)/2")]
    NotTriangular(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arbitrary flip family requested for n = {n}; supported up to n = {limit}")]
    FamilyTooLarge { n: usize, limit: usize },

    #[error("{n} qubits exceeds the dense unitary limit of {limit}")]
    TooManyQubits { n: usize, limit: usize },

    #[error("synthesized couplings miss the target by {residual:e} (tolerance {tolerance:e})")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("end-to-end verification failed: fidelity {fidelity} below {required}")]
    VerificationFailed { fidelity: f64, required: f64 },

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
