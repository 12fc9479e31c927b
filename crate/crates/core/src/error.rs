//! Error type shared by all numerical modules.

use thiserror::Error;

/// Errors raised by matrix primitives, estimation, and identification.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not symmetric: max |S - S'| = {max_asym:e} exceeds {tol:e}")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("matrix is not positive definite: min eigenvalue {min_eig:e}, max {max_eig:e}")]
    NotPositiveDefinite { min_eig: f64, max_eig: f64 },

    #[error("negative eigenvalue {value:e} in PSD square root")]
    NegativeEigenvalue { value: f64 },

    #[error("weights must be positive: w[{index}] = {value}")]
    NonpositiveWeight { index: usize, value: f64 },

    #[error("invalid permutation of 0..{n}: {detail}")]
    InvalidPermutation { n: usize, detail: String },

    #[error("matrix is not in the feasible set: ||A'SA - I||_F = {deviation:e} exceeds {tol:e}")]
    NotInFeasibleSet { deviation: f64, tol: f64 },

    #[error("matrix is singular and cannot be inverted")]
    SingularMatrix,

    #[error("matrix is not orthonormal: ||R'R - I||_F = {deviation:e} exceeds {tol:e}")]
    NotOrthonormal { deviation: f64, tol: f64 },

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("insufficient sample: T = {t_obs} with n = {n}, p = {p} requires T > {required}")]
    InsufficientSample {
        t_obs: usize,
        required: usize,
        n: usize,
        p: usize,
    },

    #[error("collinear regressors: condition number {cond:e} of Z'Z exceeds {limit:e}")]
    CollinearRegressors { cond: f64, limit: f64 },

    #[error("equicorrelation rho = {rho} outside ({lower}, 1) for n = {n}")]
    RhoOutOfRange { rho: f64, lower: f64, n: usize },

    #[error("covariance of the selected subset is singular")]
    SingularSubset,

    #[error("panel contains a non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
