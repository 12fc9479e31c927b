//! Structural-shock identification schemes and the machinery connecting
//! them: maximum-correlation (OASIS) identification in equal and weighted
//! form, Cholesky identification under arbitrary variable orderings, the
//! sequential constrained maximization it solves, rotations between
//! schemes, and the correlation diagnostics comparing them.
//!
//! Every scheme produces a matrix `A` in the feasible set
//! `{A : A' Sigma A = I}`; the structural shocks are `u = A' eps` and the
//! impact matrix is `B = (A')^{-1}` with `B B' = Sigma`.

mod scan;

pub use scan::{permutation_scan, ScanResult, DEFAULT_SCAN_BUDGET};

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matprim::{
    self, validate_permutation, CorrStructure, CovMatrix, RotationMatrix,
};

/// Frobenius tolerance on `||A' Sigma A - I||` for matrices accepted as
/// members of the feasible set; loose enough for matrices reconstructed
/// from text output.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Identification scheme tag carried by results and reports.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Oasis,
    WeightedOasis(Vec<f64>),
    Cholesky(Vec<usize>),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Oasis => write!(f, "oasis"),
            Scheme::WeightedOasis(w) => {
                let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "weighted_oasis({})", parts.join(","))
            }
            Scheme::Cholesky(ord) => {
                let parts: Vec<String> = ord.iter().map(|x| x.to_string()).collect();
                write!(f, "cholesky({})", parts.join(","))
            }
        }
    }
}

/// Positive per-variable weights for the weighted correlation objective.
#[derive(Debug, Clone)]
pub struct Weights {
    values: Vec<f64>,
}

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonpositiveWeight { index, value });
            }
        }
        Ok(Self { values })
    }

    /// Equal weights `1/n`, under which the objective is the plain average
    /// correlation.
    pub fn equal(n: usize) -> Self {
        Self {
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Result of one identification scheme applied to a covariance matrix.
#[derive(Debug, Clone)]
pub struct IdentificationResult {
    pub scheme: Scheme,
    /// Matrix with `A' Sigma A = I`; structural shocks are `u = A' eps`.
    pub a: DMatrix<f64>,
    /// Impact matrix `B = (A')^{-1}` with `eps = B u` and `B B' = Sigma`.
    pub b: DMatrix<f64>,
    /// `corr(u_i, eps_i)` per variable, in original variable order.
    pub per_shock_corr: DVector<f64>,
    /// Mean of the per-shock correlations.
    pub avg_corr: f64,
}

impl IdentificationResult {
    fn from_a(scheme: Scheme, a: DMatrix<f64>, sigma: &CovMatrix) -> Result<Self> {
        let b = a
            .transpose()
            .try_inverse()
            .ok_or(Error::SingularMatrix)?;
        let per_shock_corr = per_shock_correlations(&a, sigma);
        let avg_corr = per_shock_corr.mean();
        Ok(Self {
            scheme,
            a,
            b,
            per_shock_corr,
            avg_corr,
        })
    }
}

/// `||A' Sigma A - I||_F`, the distance of `a` from the feasible set.
pub fn feasibility_defect(a: &DMatrix<f64>, sigma: &CovMatrix) -> f64 {
    let mut g = a.transpose() * sigma.values() * a;
    for i in 0..g.nrows().min(g.ncols()) {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

fn check_feasible(a: &DMatrix<f64>, sigma: &CovMatrix) -> Result<()> {
    if a.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "A has {} rows, Sigma is {}x{}",
                a.nrows(),
                sigma.dim(),
                sigma.dim()
            ),
        });
    }
    let deviation = feasibility_defect(a, sigma);
    if deviation > FEASIBILITY_TOL {
        return Err(Error::NotInFeasibleSet {
            deviation,
            tol: FEASIBILITY_TOL,
        });
    }
    Ok(())
}

/// `corr(u_i, eps_i)` for `u = A' eps`: the diagonal of
/// `A' Lambda_sigma C = A' Sigma Lambda_sigma^{-1}`.
fn per_shock_correlations(a: &DMatrix<f64>, sigma: &CovMatrix) -> DVector<f64> {
    let n = sigma.dim();
    let sd = sigma.sigma();
    let cross = a.transpose() * sigma.values();
    DVector::from_fn(n, |i, _| cross[(i, i)] / sd[i])
}

/// Maximum-correlation identification: `A = Lambda_sigma^{-1} C^{-1/2}`,
/// the unique feasible matrix maximizing the average correlation between
/// structural shocks and their reduced-form innovations. Order- and
/// scale-invariant.
pub fn oasis(sigma: &CovMatrix) -> Result<IdentificationResult> {
    let cs = CorrStructure::from_cov(sigma)?;
    let inv_sd = DMatrix::from_diagonal(&cs.sigma().map(|s| 1.0 / s));
    let a = inv_sd * cs.corr_inv_sqrt();
    IdentificationResult::from_a(Scheme::Oasis, a, sigma)
}

/// Weighted maximum-correlation identification:
/// `A = Lambda_sigma^{-1} Lambda_w (Lambda_w C Lambda_w)^{-1/2}`. The
/// attained weighted objective is the sum of the square roots of the
/// eigenvalues of `Lambda_w C Lambda_w`; equal weights reduce to [`oasis`].
pub fn weighted_oasis(sigma: &CovMatrix, weights: &Weights) -> Result<IdentificationResult> {
    let n = sigma.dim();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            detail: format!("{} weights for dimension {}", weights.len(), n),
        });
    }
    let cs = CorrStructure::from_cov(sigma)?;
    let w = DMatrix::from_diagonal(&DVector::from_row_slice(weights.values()));
    let weighted_corr = &w * cs.corr() * &w;
    let inv_root = matprim::sym_inv_sqrt(&weighted_corr)?;
    let inv_sd = DMatrix::from_diagonal(&cs.sigma().map(|s| 1.0 / s));
    let a = inv_sd * w * inv_root;
    IdentificationResult::from_a(
        Scheme::WeightedOasis(weights.values().to_vec()),
        a,
        sigma,
    )
}

/// Recursive identification from the Cholesky factor of the covariance
/// permuted by `ordering` (entry `k` is the original index of the variable
/// placed k-th). The result is mapped back so rows, columns, and per-shock
/// correlations all refer to original variable positions; the first-ordered
/// variable has per-shock correlation exactly one.
pub fn cholesky_id(sigma: &CovMatrix, ordering: &[usize]) -> Result<IdentificationResult> {
    let n = sigma.dim();
    validate_permutation(ordering, n)?;
    let permuted = sigma.permuted(ordering)?;
    let l = matprim::cholesky_lower(permuted.values())?;
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularMatrix)?;
    let a_permuted = l_inv.transpose();

    let mut inverse = vec![0usize; n];
    for (pos, &orig) in ordering.iter().enumerate() {
        inverse[orig] = pos;
    }
    let a = DMatrix::from_fn(n, n, |i, j| a_permuted[(inverse[i], inverse[j])]);
    IdentificationResult::from_a(Scheme::Cholesky(ordering.to_vec()), a, sigma)
}

/// Solves the sequence of constrained maximum-correlation problems
/// directly: column `j` maximizes `corr(a' eps, eps_j)` subject to unit
/// variance and zero covariance with all earlier columns. Built by
/// Gram-Schmidt in the Sigma inner product on the coordinate basis, with
/// no triangular factorization, so it serves as an independent oracle for
/// the Cholesky characterization.
pub fn sequential_max_corr(sigma: &CovMatrix) -> Result<IdentificationResult> {
    let n = sigma.dim();
    let s = sigma.values();
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let target = s.column(j).into_owned(); // Sigma e_j
        let mut b = DVector::zeros(n);
        b[j] = 1.0;
        for prior in &columns {
            let load = prior.dot(&target);
            b -= prior * load;
        }
        let variance = (s * &b).dot(&b);
        if variance <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eig: variance,
                max_eig: f64::NAN,
            });
        }
        let mut a_j = b / variance.sqrt();
        if a_j.dot(&target) < 0.0 {
            a_j = -a_j;
        }
        columns.push(a_j);
    }
    let a = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
    IdentificationResult::from_a(Scheme::Cholesky((0..n).collect()), a, sigma)
}

/// Weighted correlation objective `sum_i w_i corr(u_i, eps_i)` for a
/// feasible matrix, together with the per-shock correlations.
pub fn avg_corr(
    a: &DMatrix<f64>,
    sigma: &CovMatrix,
    weights: &Weights,
) -> Result<(f64, DVector<f64>)> {
    check_feasible(a, sigma)?;
    if weights.len() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            detail: format!("{} weights for dimension {}", weights.len(), sigma.dim()),
        });
    }
    let per_shock = per_shock_correlations(a, sigma);
    let value = per_shock
        .iter()
        .zip(weights.values())
        .map(|(rho, w)| rho * w)
        .sum();
    Ok((value, per_shock))
}

/// Mean correlation `(1/n) sum_i corr(u_i, eps_i)` for a feasible matrix.
pub fn mean_corr(a: &DMatrix<f64>, sigma: &CovMatrix) -> Result<f64> {
    let (value, _) = avg_corr(a, sigma, &Weights::equal(sigma.dim()))?;
    Ok(value)
}

/// Rotation `R = A1^{-1} A2` between two feasible matrices; the shocks
/// relate by `u2 = R' u1`.
pub fn rotation_between(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    sigma: &CovMatrix,
) -> Result<RotationMatrix> {
    check_feasible(a1, sigma)?;
    check_feasible(a2, sigma)?;
    let r = a1
        .clone()
        .lu()
        .solve(a2)
        .ok_or(Error::SingularMatrix)?;
    RotationMatrix::new(r)
}

/// Mean of `diag(A1' Sigma A2)`: the average correlation between the two
/// schemes' structural shocks (both are unit variance).
pub fn cross_scheme_corr(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    sigma: &CovMatrix,
) -> Result<f64> {
    check_feasible(a1, sigma)?;
    check_feasible(a2, sigma)?;
    let cross = a1.transpose() * sigma.values() * a2;
    Ok(cross.diagonal().mean())
}

/// Correlation diagnostics for one covariance matrix and one Cholesky
/// ordering.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// `d(C) = (1/n) sum_{i != j} C_ij^2`.
    pub d_corr: f64,
    /// Mean absolute off-diagonal correlation.
    pub abs_corr_mean: f64,
    /// Exact maximum average correlation (OASIS).
    pub rho_star: f64,
    /// Average correlation under Cholesky with the given ordering.
    pub rho_chol: f64,
    /// `(1 - rho_chol) / (1 - rho_star)`; `None` when `rho_star = 1`.
    pub proximity_ratio: Option<f64>,
    /// First-order approximation `1 - d(C)/8` of `rho_star`.
    pub approx_star: f64,
    /// First-order approximation `1 - d(C)/4` of `rho_chol`.
    pub approx_chol: f64,
}

/// Computes the full diagnostic set for `sigma` under `ordering`.
pub fn diagnostics(sigma: &CovMatrix, ordering: &[usize]) -> Result<Diagnostics> {
    let cs = CorrStructure::from_cov(sigma)?;
    let d_corr = matprim::dependence_level(cs.corr());
    let abs_corr_mean = matprim::mean_abs_correlation(cs.corr());
    let rho_star = cs.eigenvalues().map(f64::sqrt).mean();
    let rho_chol = cholesky_id(sigma, ordering)?.avg_corr;
    let proximity_ratio = if rho_star >= 1.0 {
        None
    } else {
        Some((1.0 - rho_chol) / (1.0 - rho_star))
    };
    Ok(Diagnostics {
        d_corr,
        abs_corr_mean,
        rho_star,
        rho_chol,
        proximity_ratio,
        approx_star: 1.0 - d_corr / 8.0,
        approx_chol: 1.0 - d_corr / 4.0,
    })
}

/// Closed-form average correlations for an equicorrelation matrix.
#[derive(Debug, Clone, Copy)]
pub struct EquicorrValues {
    pub rho_star: f64,
    pub rho_chol: f64,
}

/// Evaluates the exact average correlations attained by OASIS and by any
/// Cholesky ordering when the correlation matrix has common off-diagonal
/// value `rho`.
pub fn equicorr_closed_forms(n: usize, rho: f64) -> Result<EquicorrValues> {
    let lower = -1.0 / (n as f64 - 1.0);
    if !(rho > lower && rho < 1.0) {
        return Err(Error::RhoOutOfRange { rho, lower, n });
    }
    let nf = n as f64;
    let rho_star = (1.0 + (nf - 1.0) * rho).sqrt() / nf + (1.0 - rho).sqrt() * (1.0 - 1.0 / nf);
    let mut sum = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        sum += (1.0 - (kf - 1.0) * rho * rho / ((kf - 2.0) * rho + 1.0)).sqrt();
    }
    Ok(EquicorrValues {
        rho_star,
        rho_chol: sum / nf,
    })
}

/// Decomposition of a feasible matrix's average correlation into
/// eigenvalue contributions: with `R` the rotation from the OASIS solution
/// to `a` and `Q` the eigenvectors of `C`, `M = Q' R' Q` is orthonormal
/// and `sum_i M_ii sqrt(lambda_i)` reproduces `n` times the average
/// correlation. The diagonal of `M` shows how the square-root eigenvalues
/// are scaled down relative to the maximum.
#[derive(Debug, Clone)]
pub struct EigenDownscale {
    pub m: DMatrix<f64>,
    pub sqrt_eigenvalues: DVector<f64>,
    /// `sum_i M_ii sqrt(lambda_i) = n * avg_corr(a)`.
    pub reconstruction: f64,
}

pub fn eigen_downscale_decomposition(
    a: &DMatrix<f64>,
    sigma: &CovMatrix,
) -> Result<EigenDownscale> {
    check_feasible(a, sigma)?;
    let star = oasis(sigma)?;
    let rotation = rotation_between(&star.a, a, sigma)?;
    let cs = CorrStructure::from_cov(sigma)?;
    let q = cs.eigenvectors();
    let m = q.transpose() * rotation.transpose() * q;
    let sqrt_eigenvalues = cs.eigenvalues().map(f64::sqrt);
    let reconstruction = (0..sigma.dim())
        .map(|i| m[(i, i)] * sqrt_eigenvalues[i])
        .sum();
    Ok(EigenDownscale {
        m,
        sqrt_eigenvalues,
        reconstruction,
    })
}
