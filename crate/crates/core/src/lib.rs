//! Reduced-form VAR estimation with structural-shock identification by
//! maximum correlation (OASIS), classical Cholesky orderings, and
//! proxy-instrument alignment, plus the diagnostics and impulse-response
//! machinery connecting the schemes.
//!
//! The crate is organized around pure functions on immutable inputs:
//!
//! * [`matprim`] — symmetric eigendecompositions, matrix square roots,
//!   Cholesky factors, and covariance/correlation conversion with fixed
//!   ordering and sign conventions.
//! * [`var`] — VAR(p) least-squares estimation, the moving-average
//!   recursion, and local projections.
//! * [`ident`] — the identification schemes, rotations between them,
//!   ordering scans, and correlation diagnostics.
//! * [`proxy`] — SVD alignment of structural shocks with external
//!   instruments and the subset adaptation.
//! * [`irf`] — structural impulse responses and their rotation across
//!   schemes.
//! * [`sim`] — seeded simulation of VAR paths and random test matrices.

pub mod error;
pub mod ident;
pub mod irf;
pub mod matprim;
pub mod proxy;
pub mod sim;
pub mod var;

pub use error::{Error, Result};
pub use ident::{
    avg_corr, cholesky_id, cross_scheme_corr, diagnostics, eigen_downscale_decomposition,
    equicorr_closed_forms, mean_corr, oasis, permutation_scan, rotation_between,
    sequential_max_corr, weighted_oasis, Diagnostics, IdentificationResult, ScanResult,
    Scheme, Weights, DEFAULT_SCAN_BUDGET,
};
pub use irf::{lp_structural_irf, rotate_irf, structural_irf, IrfSet};
pub use matprim::{corr_from_cov, CorrStructure, CovMatrix, RotationMatrix};
pub use proxy::{proxy_oasis, proxy_objective, subset_oasis, ProxyInputs, ProxyResult};
pub use var::{
    estimate_var, estimate_var_with, local_projection, ma_coefficients, LpResult,
    MaCoefficients, TimeSeriesPanel, Transform, VarModel, VarOptions,
};
