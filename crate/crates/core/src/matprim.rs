//! Symmetric-matrix primitives: eigendecomposition-based square roots,
//! Cholesky factorization, covariance/correlation conversion, and the
//! orthonormality checks used by the identification layer.
//!
//! Conventions fixed here so every downstream matrix is reproducible
//! across runs: eigenvalues are sorted descending, and each eigenvector
//! column is signed so its largest-magnitude entry is positive (ties
//! broken by lowest index).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry tolerance for inputs that must be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Frobenius tolerance for R'R = I checks on rotation matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Frobenius norm of `m - I`.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    let mut g = m.transpose() * m;
    for i in 0..n {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

fn check_square_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch {
            detail: format!("expected square matrix, got {}x{}", s.nrows(), s.ncols()),
        });
    }
    let scale = max_abs(s).max(1.0);
    let mut max_asym = 0.0_f64;
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            max_asym = max_asym.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if max_asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            max_asym,
            tol: SYMMETRY_TOL * scale,
        });
    }
    Ok(())
}

fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = s.clone();
    for i in 0..s.nrows() {
        for j in 0..i {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Eigendecomposition of a symmetric matrix with the crate-wide ordering
/// and sign conventions. Returns `(eigenvalues, eigenvectors)` with
/// eigenvalues descending and column `k` of the eigenvector matrix
/// belonging to eigenvalue `k`.
pub fn sym_eigen(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_square_symmetric(s)?;
    let n = s.nrows();
    let eig = symmetrize(s).symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a real symmetric matrix are finite")
    });

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let col = eig.eigenvectors.column(src);
        // Sign convention: largest-magnitude entry positive, lowest index on ties.
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    Ok((values, vectors))
}

/// Positive-definiteness cutoff: smallest eigenvalue must exceed
/// `n * eps * lambda_max`.
fn check_pd(values: &DVector<f64>) -> Result<()> {
    let n = values.len();
    let max_eig = values[0];
    let min_eig = values[n - 1];
    if min_eig <= n as f64 * f64::EPSILON * max_eig.max(0.0) {
        return Err(Error::NotPositiveDefinite { min_eig, max_eig });
    }
    Ok(())
}

/// Symmetric square root `Q L^{1/2} Q'` of a symmetric PSD matrix.
pub fn sym_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, q) = sym_eigen(s)?;
    let floor = -(s.nrows() as f64) * f64::EPSILON * values[0].abs().max(1.0);
    let mut roots = values.clone();
    for v in roots.iter_mut() {
        if *v < floor {
            return Err(Error::NegativeEigenvalue { value: *v });
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(&q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Symmetric inverse square root `Q L^{-1/2} Q'` of a symmetric PD matrix.
pub fn sym_inv_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, q) = sym_eigen(s)?;
    check_pd(&values)?;
    let inv_roots = values.map(|v| 1.0 / v.sqrt());
    Ok(&q * DMatrix::from_diagonal(&inv_roots) * q.transpose())
}

/// Lower-triangular Cholesky factor `L` with `L L' = S` and positive diagonal.
pub fn cholesky_lower(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_symmetric(s)?;
    match symmetrize(s).cholesky() {
        Some(chol) => Ok(chol.l()),
        None => {
            // Recover the eigenvalue bounds for the error report.
            let (values, _) = sym_eigen(s)?;
            Err(Error::NotPositiveDefinite {
                min_eig: values[values.len() - 1],
                max_eig: values[0],
            })
        }
    }
}

/// Average squared off-diagonal correlation scaled by dimension:
/// `d(C) = (1/n) sum_{i != j} C_ij^2`, the squared Frobenius distance of
/// C from the identity divided by n.
pub fn dependence_level(corr: &DMatrix<f64>) -> f64 {
    let n = corr.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += corr[(i, j)] * corr[(i, j)];
            }
        }
    }
    sum / n as f64
}

/// Mean absolute off-diagonal correlation:
/// `(1/(n(n-1))) sum_{i != j} |C_ij|`.
pub fn mean_abs_correlation(corr: &DMatrix<f64>) -> f64 {
    let n = corr.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += corr[(i, j)].abs();
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

/// Equicorrelation matrix with off-diagonal `rho`; positive definite for
/// `rho` in `(-1/(n-1), 1)`.
pub fn equicorrelation(n: usize, rho: f64) -> Result<DMatrix<f64>> {
    let lower = -1.0 / (n as f64 - 1.0);
    if !(rho > lower && rho < 1.0) {
        return Err(Error::RhoOutOfRange { rho, lower, n });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho }))
}

/// A symmetric positive definite covariance matrix.
///
/// Construction symmetrizes the input after checking the asymmetry is
/// within tolerance, and rejects matrices whose smallest eigenvalue falls
/// below the `n * eps * lambda_max` cutoff.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    values: DMatrix<f64>,
}

impl CovMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (eigvals, _) = sym_eigen(&values)?;
        check_pd(&eigvals)?;
        Ok(Self {
            values: symmetrize(&values),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Per-variable standard deviations (square roots of the diagonal).
    pub fn sigma(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.values[(i, i)].sqrt())
    }

    /// Covariance of the variables re-indexed by `ordering` (entry `k` of
    /// the ordering is the original index of the variable placed k-th).
    pub fn permuted(&self, ordering: &[usize]) -> Result<Self> {
        validate_permutation(ordering, self.dim())?;
        let n = self.dim();
        let permuted =
            DMatrix::from_fn(n, n, |i, j| self.values[(ordering[i], ordering[j])]);
        // Permutation preserves symmetry and eigenvalues; re-check is cheap.
        Self::new(permuted)
    }
}

/// Checks that `ordering` is a permutation of `0..n`.
pub fn validate_permutation(ordering: &[usize], n: usize) -> Result<()> {
    if ordering.len() != n {
        return Err(Error::InvalidPermutation {
            n,
            detail: format!("length {} != {}", ordering.len(), n),
        });
    }
    let mut seen = vec![false; n];
    for &idx in ordering {
        if idx >= n {
            return Err(Error::InvalidPermutation {
                n,
                detail: format!("index {idx} out of range"),
            });
        }
        if seen[idx] {
            return Err(Error::InvalidPermutation {
                n,
                detail: format!("index {idx} repeated"),
            });
        }
        seen[idx] = true;
    }
    Ok(())
}

/// The (C, Lambda_sigma) split of a covariance matrix together with the
/// eigendecomposition of C.
#[derive(Debug, Clone)]
pub struct CorrStructure {
    corr: DMatrix<f64>,
    sigma: DVector<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl CorrStructure {
    /// Splits `Sigma = Lambda_sigma C Lambda_sigma` and eigendecomposes C.
    /// The diagonal of C is set to exactly one.
    pub fn from_cov(cov: &CovMatrix) -> Result<Self> {
        let n = cov.dim();
        let sigma = cov.sigma();
        let mut corr = DMatrix::from_fn(n, n, |i, j| {
            cov.values()[(i, j)] / (sigma[i] * sigma[j])
        });
        for i in 0..n {
            corr[(i, i)] = 1.0;
        }
        let (eigenvalues, eigenvectors) = sym_eigen(&corr)?;
        check_pd(&eigenvalues)?;
        Ok(Self {
            corr,
            sigma,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.corr.nrows()
    }

    pub fn corr(&self) -> &DMatrix<f64> {
        &self.corr
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    /// Eigenvalues of C, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors of C, columns matching `eigenvalues`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `C^{1/2} = Q L^{1/2} Q'`.
    pub fn corr_sqrt(&self) -> DMatrix<f64> {
        let roots = self.eigenvalues.map(f64::sqrt);
        &self.eigenvectors * DMatrix::from_diagonal(&roots) * self.eigenvectors.transpose()
    }

    /// `C^{-1/2} = Q L^{-1/2} Q'`.
    pub fn corr_inv_sqrt(&self) -> DMatrix<f64> {
        let inv_roots = self.eigenvalues.map(|v| 1.0 / v.sqrt());
        &self.eigenvectors * DMatrix::from_diagonal(&inv_roots) * self.eigenvectors.transpose()
    }
}

/// Converts a covariance matrix into its correlation structure.
pub fn corr_from_cov(cov: &CovMatrix) -> Result<CorrStructure> {
    CorrStructure::from_cov(cov)
}

/// An orthonormal matrix mapping one identification scheme's shocks into
/// another's.
#[derive(Debug, Clone)]
pub struct RotationMatrix {
    values: DMatrix<f64>,
}

impl RotationMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "rotation must be square, got {}x{}",
                    values.nrows(),
                    values.ncols()
                ),
            });
        }
        let defect = orthonormality_defect(&values);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal {
                deviation: defect,
                tol: ORTHONORMAL_TOL,
            });
        }
        Ok(Self { values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            values: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn transpose(&self) -> DMatrix<f64> {
        self.values.transpose()
    }
}
