use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subspace dimension k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidSubspaceDim { n: usize, k: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("columns are not orthonormal: ||X^T X - I||_F = {defect:e}")]
    NotOrthonormal { defect: f64 },

    #[error("theta = {0} lies outside [0, 1]")]
    ThetaOutOfRange(f64),

    #[error("B is not positive semi-definite: min eigenvalue {min_eig:e}")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("rank(B) = {rank} must exceed n - k = {bound}")]
    RankDeficientB { rank: usize, bound: usize },

    #[error("denominator tr(X^T B X) = {0:e} is not safely positive")]
    DegenerateDenominator(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("symmetric eigensolver did not converge")]
    EigenFailure,

    #[error("bootstrap did not reach a nonnegative numerator within {iterations} iterations")]
    BootstrapFailed { iterations: usize },

    #[error("inexact eigen step did not increase tr(X^T E X): {candidate:e} < {current:e}")]
    StepRejected { current: f64, candidate: f64 },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
