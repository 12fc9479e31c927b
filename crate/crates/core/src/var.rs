//! Reduced-form VAR estimation by least squares, the moving-average
//! recursion, and local-projection regressions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matprim::{self, CovMatrix};

/// Condition-number limit on the regressor cross-product matrix.
pub const COLLINEARITY_LIMIT: f64 = 1e12;

/// Per-variable transformation applied at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Levels,
    Diff,
    LogDiff,
}

impl Transform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transform::Levels => "levels",
            Transform::Diff => "diff",
            Transform::LogDiff => "log-diff",
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "levels" => Ok(Transform::Levels),
            "diff" => Ok(Transform::Diff),
            "log-diff" | "logdiff" | "log_diff" => Ok(Transform::LogDiff),
            other => Err(format!("unknown transform '{other}'")),
        }
    }
}

/// Observed multivariate series with labels and transformation metadata.
#[derive(Debug, Clone)]
pub struct TimeSeriesPanel {
    names: Vec<String>,
    data: DMatrix<f64>,
    transforms: Vec<Transform>,
    index: Vec<String>,
}

impl TimeSeriesPanel {
    /// Builds a panel from already-transformed data. Rejects non-finite
    /// values and mismatched metadata lengths.
    pub fn new(
        names: Vec<String>,
        data: DMatrix<f64>,
        transforms: Vec<Transform>,
        index: Option<Vec<String>>,
    ) -> Result<Self> {
        let (t_obs, n) = data.shape();
        if names.len() != n || transforms.len() != n {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "{} names and {} transforms for {} columns",
                    names.len(),
                    transforms.len(),
                    n
                ),
            });
        }
        for i in 0..t_obs {
            for j in 0..n {
                if !data[(i, j)].is_finite() {
                    return Err(Error::NonFiniteValue { row: i, col: j });
                }
            }
        }
        let index = match index {
            Some(idx) => {
                if idx.len() != t_obs {
                    return Err(Error::DimensionMismatch {
                        detail: format!("{} period labels for {} rows", idx.len(), t_obs),
                    });
                }
                idx
            }
            None => (0..t_obs).map(|t| t.to_string()).collect(),
        };
        Ok(Self {
            names,
            data,
            transforms,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn index(&self) -> &[String] {
        &self.index
    }
}

/// Estimation options; the defaults match the plain moment estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct VarOptions {
    /// Divide the residual cross-product by `T - p - k` (k regressors)
    /// instead of `T - p`.
    pub df_adjust: bool,
    /// Include a linear trend term next to the intercept.
    pub trend: bool,
}

/// Estimated VAR(p).
#[derive(Debug, Clone)]
pub struct VarModel {
    pub p: usize,
    /// Intercepts, one per equation.
    pub mu: DVector<f64>,
    /// Lag coefficient matrices; entry `(i, j)` of `phi[l-1]` is the
    /// loading of variable i on lag l of variable j.
    pub phi: Vec<DMatrix<f64>>,
    /// Linear-trend coefficients when the trend option is on.
    pub trend_coef: Option<DVector<f64>>,
    /// Residuals, one row per effective observation (T - p rows).
    pub residuals: DMatrix<f64>,
    /// Residual covariance.
    pub sigma: CovMatrix,
}

impl VarModel {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Number of effective observations used in estimation.
    pub fn effective_obs(&self) -> usize {
        self.residuals.nrows()
    }
}

/// Equation-by-equation least squares of `X_t` on
/// `Z_{t-1} = (1, X_{t-1}, ..., X_{t-p})`.
pub fn estimate_var(panel: &TimeSeriesPanel, p: usize) -> Result<VarModel> {
    estimate_var_with(panel, p, VarOptions::default())
}

pub fn estimate_var_with(
    panel: &TimeSeriesPanel,
    p: usize,
    opts: VarOptions,
) -> Result<VarModel> {
    let t_obs = panel.len();
    let n = panel.dim();
    if p == 0 {
        return Err(Error::DimensionMismatch {
            detail: "lag order must be at least 1".to_string(),
        });
    }
    let k = 1 + n * p + usize::from(opts.trend);
    // Degrees of freedom: T must exceed n*p + n + 1, and the effective
    // sample must leave at least one residual degree of freedom.
    let required = (n * p + n + 1).max(p + k);
    if t_obs <= required {
        return Err(Error::InsufficientSample {
            t_obs,
            required,
            n,
            p,
        });
    }

    let rows = t_obs - p;
    let x = panel.data();
    let mut z = DMatrix::zeros(rows, k);
    let mut y = DMatrix::zeros(rows, n);
    for r in 0..rows {
        let t = r + p;
        z[(r, 0)] = 1.0;
        for lag in 1..=p {
            for j in 0..n {
                z[(r, 1 + (lag - 1) * n + j)] = x[(t - lag, j)];
            }
        }
        if opts.trend {
            z[(r, k - 1)] = (r + 1) as f64;
        }
        for j in 0..n {
            y[(r, j)] = x[(t, j)];
        }
    }

    let ztz = z.transpose() * &z;
    let (eigvals, _) = matprim::sym_eigen(&ztz)?;
    let min_eig = eigvals[eigvals.len() - 1];
    let cond = if min_eig > 0.0 {
        eigvals[0] / min_eig
    } else {
        f64::INFINITY
    };
    if !(cond <= COLLINEARITY_LIMIT) {
        return Err(Error::CollinearRegressors {
            cond,
            limit: COLLINEARITY_LIMIT,
        });
    }

    let chol = ztz.clone().cholesky().ok_or(Error::CollinearRegressors {
        cond,
        limit: COLLINEARITY_LIMIT,
    })?;
    let zty = z.transpose() * &y;
    let mut gamma = chol.solve(&zty); // k x n, one column per equation
    // One step of iterative refinement keeps Z'resid small even near the
    // conditioning limit.
    let correction = chol.solve(&(&zty - &ztz * &gamma));
    gamma += correction;

    let residuals = &y - &z * &gamma;
    let divisor = if opts.df_adjust {
        (rows - k) as f64
    } else {
        rows as f64
    };
    let sigma = CovMatrix::new(residuals.transpose() * &residuals / divisor)?;

    let mu = gamma.row(0).transpose();
    let mut phi = Vec::with_capacity(p);
    for lag in 1..=p {
        phi.push(DMatrix::from_fn(n, n, |i, j| {
            gamma[(1 + (lag - 1) * n + j, i)]
        }));
    }
    let trend_coef = opts.trend.then(|| gamma.row(k - 1).transpose());

    Ok(VarModel {
        p,
        mu,
        phi,
        trend_coef,
        residuals,
        sigma,
    })
}

/// Moving-average coefficients of the estimated VAR.
#[derive(Debug, Clone)]
pub struct MaCoefficients {
    /// `psi[h]` maps the reduced-form shock at t to `X_{t+h}`; `psi[0] = I`.
    pub psi: Vec<DMatrix<f64>>,
}

/// Companion recursion `Psi_h = sum_{i=1}^{min(h,p)} Phi_i Psi_{h-i}`
/// with `Psi_0 = I`.
pub fn ma_coefficients(model: &VarModel, horizon: usize) -> MaCoefficients {
    let n = model.dim();
    let mut psi = Vec::with_capacity(horizon + 1);
    psi.push(DMatrix::identity(n, n));
    for h in 1..=horizon {
        let mut acc = DMatrix::zeros(n, n);
        for i in 1..=h.min(model.p) {
            acc += &model.phi[i - 1] * &psi[h - i];
        }
        psi.push(acc);
    }
    MaCoefficients { psi }
}

/// Local-projection regressions of `X_{t+h}` on `(1, eps_t)`.
#[derive(Debug, Clone)]
pub struct LpResult {
    /// `theta[h]` maps the reduced-form shock at t to `X_{t+h}`.
    pub theta: Vec<DMatrix<f64>>,
    /// Per-horizon regression residuals.
    pub residuals: Vec<DMatrix<f64>>,
}

/// Runs the per-horizon regressions. Residual rows are aligned to the end
/// of the panel: residual row `i` belongs to panel row
/// `panel.len() - residuals.nrows() + i`, which matches how a VAR's
/// residuals cover the last `T - p` observations.
pub fn local_projection(
    panel: &TimeSeriesPanel,
    residuals: &DMatrix<f64>,
    horizon: usize,
) -> Result<LpResult> {
    let n = panel.dim();
    if residuals.ncols() != n {
        return Err(Error::DimensionMismatch {
            detail: format!("residuals have {} columns for n = {n}", residuals.ncols()),
        });
    }
    if residuals.nrows() > panel.len() {
        return Err(Error::DimensionMismatch {
            detail: "more residual rows than panel rows".to_string(),
        });
    }
    let start = panel.len() - residuals.nrows();
    let x = panel.data();
    let mut theta = Vec::with_capacity(horizon + 1);
    let mut lp_residuals = Vec::with_capacity(horizon + 1);

    for h in 0..=horizon {
        let rows = residuals.nrows().saturating_sub(h);
        if rows < n + 2 {
            return Err(Error::InsufficientSample {
                t_obs: rows,
                required: n + 2,
                n,
                p: h,
            });
        }
        let mut w = DMatrix::zeros(rows, n + 1);
        let mut y = DMatrix::zeros(rows, n);
        for r in 0..rows {
            w[(r, 0)] = 1.0;
            for j in 0..n {
                w[(r, 1 + j)] = residuals[(r, j)];
                y[(r, j)] = x[(start + r + h, j)];
            }
        }
        let wtw = w.transpose() * &w;
        let chol = wtw.cholesky().ok_or(Error::CollinearRegressors {
            cond: f64::INFINITY,
            limit: COLLINEARITY_LIMIT,
        })?;
        let coef = chol.solve(&(w.transpose() * &y)); // (n+1) x n
        let fitted = &w * &coef;
        lp_residuals.push(&y - fitted);
        theta.push(DMatrix::from_fn(n, n, |i, j| coef[(1 + j, i)]));
    }

    Ok(LpResult {
        theta,
        residuals: lp_residuals,
    })
}
