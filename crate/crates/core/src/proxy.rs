//! Proxy-VAR identification: alignment of r structural shocks with r
//! external instruments through the singular value decomposition of
//! `Xi = C_ee^{-1/2} C_ez Lambda_w`, plus the subset adaptation that
//! treats selected reduced-form shocks as their own instruments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ident::{feasibility_defect, Weights, FEASIBILITY_TOL};
use crate::matprim::{CorrStructure, CovMatrix};

/// Relative cutoff below which the smallest singular value marks the
/// instrument set as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Inputs to the proxy alignment: the covariance of the reduced-form
/// shocks, their cross-correlation with the instruments, and per-
/// instrument weights.
#[derive(Debug, Clone)]
pub struct ProxyInputs {
    sigma: CovMatrix,
    c_eps_z: DMatrix<f64>,
    weights: Weights,
}

impl ProxyInputs {
    /// From a precomputed cross-correlation matrix (n x r).
    pub fn new(sigma: CovMatrix, c_eps_z: DMatrix<f64>, weights: Weights) -> Result<Self> {
        let n = sigma.dim();
        let r = c_eps_z.ncols();
        if c_eps_z.nrows() != n || r > n || r == 0 {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "cross-correlation is {}x{} for n = {n}",
                    c_eps_z.nrows(),
                    r
                ),
            });
        }
        if weights.len() != r {
            return Err(Error::DimensionMismatch {
                detail: format!("{} weights for r = {r}", weights.len()),
            });
        }
        for i in 0..n {
            for j in 0..r {
                let v = c_eps_z[(i, j)];
                if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                    return Err(Error::DimensionMismatch {
                        detail: format!("corr(eps_{i}, z_{j}) = {v} is not a correlation"),
                    });
                }
            }
        }
        Ok(Self {
            sigma,
            c_eps_z,
            weights,
        })
    }

    /// From sample paths of the reduced-form shocks and instruments.
    /// Columns are demeaned and cross-products are divided by the row
    /// count, matching the residual-covariance divisor.
    pub fn from_samples(
        eps: &DMatrix<f64>,
        z: &DMatrix<f64>,
        weights: Weights,
    ) -> Result<Self> {
        if eps.nrows() != z.nrows() || eps.nrows() < 2 {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "{} shock rows vs {} instrument rows",
                    eps.nrows(),
                    z.nrows()
                ),
            });
        }
        let t = eps.nrows() as f64;
        let demean = |m: &DMatrix<f64>| {
            let mut out = m.clone();
            for j in 0..m.ncols() {
                let mean = m.column(j).mean();
                for i in 0..m.nrows() {
                    out[(i, j)] -= mean;
                }
            }
            out
        };
        let e = demean(eps);
        let zz = demean(z);
        let sigma = CovMatrix::new(e.transpose() * &e / t)?;
        let sd_e = sigma.sigma();
        let sd_z = DVector::from_fn(z.ncols(), |j, _| {
            (zz.column(j).norm_squared() / t).sqrt()
        });
        let cross = e.transpose() * &zz / t;
        let c_eps_z = DMatrix::from_fn(eps.ncols(), z.ncols(), |i, j| {
            cross[(i, j)] / (sd_e[i] * sd_z[j])
        });
        Self::new(sigma, c_eps_z, weights)
    }

    pub fn sigma(&self) -> &CovMatrix {
        &self.sigma
    }

    pub fn c_eps_z(&self) -> &DMatrix<f64> {
        &self.c_eps_z
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.sigma.dim()
    }

    pub fn r(&self) -> usize {
        self.c_eps_z.ncols()
    }
}

/// Optimal proxy alignment.
#[derive(Debug, Clone)]
pub struct ProxyResult {
    /// n x r matrix with `a' Sigma a = I_r`; shocks are `u = a' eps`.
    pub a_star: DMatrix<f64>,
    /// Singular values of Xi, descending. With unit weights each lies in
    /// [0, 1] and measures the identifying content of the instrument.
    pub xi: DVector<f64>,
    /// Attained objective, the sum of the singular values.
    pub objective: f64,
    /// False when the smallest singular value is negligible relative to
    /// the largest; the maximizer is then not unique.
    pub full_rank: bool,
}

/// Thin SVD with singular values sorted descending and each left singular
/// vector signed so its largest-magnitude entry is positive (ties to the
/// lowest index), the paired right vector flipped with it.
fn thin_svd_sorted(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let svd = m.clone().svd(true, true);
    let u_raw = svd.u.ok_or(Error::SingularMatrix)?;
    let vt_raw = svd.v_t.ok_or(Error::SingularMatrix)?;
    let k = svd.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });

    let n = u_raw.nrows();
    let r = vt_raw.ncols();
    let mut u = DMatrix::zeros(n, k);
    let mut v = DMatrix::zeros(r, k);
    let mut values = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = svd.singular_values[src];
        let mut pivot = 0;
        for i in 1..n {
            if u_raw[(i, src)].abs() > u_raw[(pivot, src)].abs() {
                pivot = i;
            }
        }
        let sign = if u_raw[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            u[(i, dst)] = sign * u_raw[(i, src)];
        }
        for j in 0..r {
            v[(j, dst)] = sign * vt_raw[(src, j)];
        }
    }
    Ok((u, values, v))
}

/// Maximizes the weighted sum of correlations between structural shocks
/// and instruments over all feasible n x r matrices:
/// `a* = Lambda_sigma^{-1} C_ee^{-1/2} U V'` from the SVD
/// `Xi = U Lambda_xi V'`.
pub fn proxy_oasis(inputs: &ProxyInputs) -> Result<ProxyResult> {
    let cs = CorrStructure::from_cov(inputs.sigma())?;
    let inv_root = cs.corr_inv_sqrt();
    let w = DMatrix::from_diagonal(&DVector::from_row_slice(inputs.weights().values()));
    let xi_matrix = &inv_root * inputs.c_eps_z() * &w;
    let (u, xi, v) = thin_svd_sorted(&xi_matrix)?;

    let inv_sd = DMatrix::from_diagonal(&cs.sigma().map(|s| 1.0 / s));
    let a_star = inv_sd * inv_root * u * v.transpose();
    let objective = xi.sum();
    let full_rank = xi[xi.len() - 1] > RANK_TOL * xi[0];
    Ok(ProxyResult {
        a_star,
        xi,
        objective,
        full_rank,
    })
}

/// Weighted correlation objective `sum_j w_j corr(u_j, z_j)` for a
/// feasible n x r matrix: the diagonal of `a' Lambda_sigma C_ez Lambda_w`.
pub fn proxy_objective(a: &DMatrix<f64>, inputs: &ProxyInputs) -> Result<f64> {
    let r = inputs.r();
    if a.nrows() != inputs.n() || a.ncols() != r {
        return Err(Error::DimensionMismatch {
            detail: format!("a is {}x{}, expected {}x{}", a.nrows(), a.ncols(), inputs.n(), r),
        });
    }
    let deviation = feasibility_defect(a, inputs.sigma());
    if deviation > FEASIBILITY_TOL {
        return Err(Error::NotInFeasibleSet {
            deviation,
            tol: FEASIBILITY_TOL,
        });
    }
    let sd = DMatrix::from_diagonal(&inputs.sigma().sigma());
    let cross = a.transpose() * sd * inputs.c_eps_z();
    Ok((0..r)
        .map(|j| cross[(j, j)] * inputs.weights().values()[j])
        .sum())
}

/// Subset adaptation: treats the selected reduced-form shocks as their
/// own instruments (`z = eps_subset`) and extracts the r structural
/// shocks aligned with them. Unit weights.
pub fn subset_oasis(sigma: &CovMatrix, subset: &[usize]) -> Result<ProxyResult> {
    let n = sigma.dim();
    let r = subset.len();
    if r == 0 || r > n {
        return Err(Error::DimensionMismatch {
            detail: format!("subset of size {r} for n = {n}"),
        });
    }
    let mut seen = vec![false; n];
    for &idx in subset {
        if idx >= n {
            return Err(Error::InvalidPermutation {
                n,
                detail: format!("subset index {idx} out of range"),
            });
        }
        if seen[idx] {
            return Err(Error::InvalidPermutation {
                n,
                detail: format!("subset index {idx} repeated"),
            });
        }
        seen[idx] = true;
    }

    let cs = CorrStructure::from_cov(sigma)?;
    let sub_corr = DMatrix::from_fn(r, r, |i, j| cs.corr()[(subset[i], subset[j])]);
    if CovMatrix::new(sub_corr).is_err() {
        return Err(Error::SingularSubset);
    }

    let c_eps_z = DMatrix::from_fn(n, r, |i, j| cs.corr()[(i, subset[j])]);
    let inputs = ProxyInputs::new(sigma.clone(), c_eps_z, Weights::new(vec![1.0; r])?)?;
    proxy_oasis(&inputs)
}
