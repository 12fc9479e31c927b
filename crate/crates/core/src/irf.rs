//! Structural impulse responses from MA coefficients or local
//! projections, and rotation of IRF sets between identification schemes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ident::IdentificationResult;
use crate::matprim::RotationMatrix;
use crate::var::{LpResult, MaCoefficients};

/// Impulse responses per horizon: rows are responding variables, columns
/// are structural shocks, all per unit (one standard deviation) shock.
#[derive(Debug, Clone)]
pub struct IrfSet {
    pub values: Vec<DMatrix<f64>>,
    pub scheme: String,
    pub horizon: usize,
}

impl IrfSet {
    /// Impact matrix `IRF(0)`.
    pub fn impact(&self) -> &DMatrix<f64> {
        &self.values[0]
    }
}

fn check_dims(b: &DMatrix<f64>, maps: &[DMatrix<f64>]) -> Result<()> {
    let n = b.nrows();
    if maps
        .iter()
        .any(|m| m.nrows() != n || m.ncols() != n || b.ncols() != n)
    {
        return Err(Error::DimensionMismatch {
            detail: "identification and coefficient dimensions differ".to_string(),
        });
    }
    Ok(())
}

/// SVAR impulse responses `IRF(h) = Psi_h B`; the impact response is `B`.
pub fn structural_irf(ma: &MaCoefficients, ident: &IdentificationResult) -> Result<IrfSet> {
    check_dims(&ident.b, &ma.psi)?;
    let values: Vec<DMatrix<f64>> = ma.psi.iter().map(|psi| psi * &ident.b).collect();
    Ok(IrfSet {
        horizon: values.len() - 1,
        values,
        scheme: ident.scheme.to_string(),
    })
}

/// Local-projection impulse responses `IRF(h) = Theta_h B`.
pub fn lp_structural_irf(lp: &LpResult, ident: &IdentificationResult) -> Result<IrfSet> {
    check_dims(&ident.b, &lp.theta)?;
    let values: Vec<DMatrix<f64>> = lp.theta.iter().map(|theta| theta * &ident.b).collect();
    Ok(IrfSet {
        horizon: values.len() - 1,
        values,
        scheme: format!("lp:{}", ident.scheme),
    })
}

/// Right-multiplies every horizon by the rotation, mapping one scheme's
/// IRFs into another's: with `R = A1^{-1} A2` the shocks relate by
/// `u2 = R' u1` and the IRFs by `IRF2(h) = IRF1(h) R`.
pub fn rotate_irf(base: &IrfSet, rotation: &RotationMatrix) -> Result<IrfSet> {
    if base.values.iter().any(|m| m.ncols() != rotation.dim()) {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "rotation is {0}x{0} but IRFs have {1} shock columns",
                rotation.dim(),
                base.values[0].ncols()
            ),
        });
    }
    Ok(IrfSet {
        values: base.values.iter().map(|m| m * rotation.values()).collect(),
        scheme: format!("{}+rotation", base.scheme),
        horizon: base.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::{cholesky_id, oasis, rotation_between};
    use crate::matprim::CovMatrix;
    use crate::sim;
    use crate::var::{estimate_var, local_projection, ma_coefficients, TimeSeriesPanel, Transform};
    use nalgebra::DVector;

    fn diag_var1_panel(t_obs: usize, seed: u64) -> TimeSeriesPanel {
        let phi = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.2]);
        let sigma = CovMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let data = sim::simulate_var(&DVector::zeros(2), &[phi], &sigma, t_obs, 200, seed).unwrap();
        TimeSeriesPanel::new(
            vec!["a".into(), "b".into()],
            data,
            vec![Transform::Levels; 2],
            None,
        )
        .unwrap()
    }

    #[test]
    fn impact_equals_b() {
        let panel = diag_var1_panel(500, 3);
        let model = estimate_var(&panel, 1).unwrap();
        let ident = oasis(&model.sigma).unwrap();
        let ma = ma_coefficients(&model, 0);
        let irf = structural_irf(&ma, &ident).unwrap();
        assert_eq!(irf.values.len(), 1);
        assert!((irf.impact() - &ident.b).norm() < 1e-14);
    }

    #[test]
    fn diagonal_var_with_exact_coefficients() {
        // With Sigma = I and OASIS, IRF(h) = Psi_h = diag(0.5^h, 0.2^h).
        let panel = diag_var1_panel(500, 5);
        let mut model = estimate_var(&panel, 1).unwrap();
        model.phi[0] = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.2]);
        model.sigma = CovMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let ident = oasis(&model.sigma).unwrap();
        let ma = ma_coefficients(&model, 3);
        let irf = structural_irf(&ma, &ident).unwrap();
        for h in 0..=3_i32 {
            let expected = DMatrix::from_row_slice(
                2,
                2,
                &[0.5_f64.powi(h), 0.0, 0.0, 0.2_f64.powi(h)],
            );
            assert!((&irf.values[h as usize] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn cholesky_impact_is_triangular_under_its_ordering() {
        let mut rng = sim::seeded_rng(7);
        let sigma = sim::random_covariance(3, &mut rng);
        let ordering = vec![2, 0, 1];
        let ident = cholesky_id(&sigma, &ordering).unwrap();
        // In the ordering's coordinates the impact matrix is lower
        // triangular: variable placed earlier cannot respond to a later
        // shock at impact.
        for (i_pos, &i) in ordering.iter().enumerate() {
            for (j_pos, &j) in ordering.iter().enumerate() {
                if j_pos > i_pos {
                    assert!(
                        ident.b[(i, j)].abs() < 1e-12,
                        "impact ({i},{j}) should be a structural zero"
                    );
                }
            }
        }
    }

    #[test]
    fn lp_irf_impact_and_identity_b() {
        let panel = diag_var1_panel(2_000, 11);
        let model = estimate_var(&panel, 1).unwrap();
        let lp = local_projection(&panel, &model.residuals, 4).unwrap();
        let ident = oasis(&model.sigma).unwrap();
        let irf = lp_structural_irf(&lp, &ident).unwrap();
        assert!((irf.impact() - &ident.b).norm() < 1e-6);

        // With B = I the LP IRFs are the Theta matrices unchanged.
        let eye = CovMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let ident_eye = oasis(&eye).unwrap();
        let irf_eye = lp_structural_irf(&lp, &ident_eye).unwrap();
        for h in 0..=4 {
            assert!((&irf_eye.values[h] - &lp.theta[h]).norm() < 1e-14);
        }
    }

    #[test]
    fn lp_and_var_irfs_agree_on_long_samples() {
        let panel = diag_var1_panel(10_000, 13);
        let model = estimate_var(&panel, 1).unwrap();
        let ident = oasis(&model.sigma).unwrap();
        let ma = ma_coefficients(&model, 4);
        let lp = local_projection(&panel, &model.residuals, 4).unwrap();
        let var_irf = structural_irf(&ma, &ident).unwrap();
        let lp_irf = lp_structural_irf(&lp, &ident).unwrap();
        for h in 0..=4 {
            let dev = (&var_irf.values[h] - &lp_irf.values[h]).abs().max();
            assert!(dev < 0.1, "h={h}: {dev}");
        }
    }

    #[test]
    fn rotation_round_trip_and_cross_scheme() {
        let panel = diag_var1_panel(800, 17);
        let model = estimate_var(&panel, 2).unwrap();
        let star = oasis(&model.sigma).unwrap();
        let chol = cholesky_id(&model.sigma, &[1, 0]).unwrap();
        let ma = ma_coefficients(&model, 10);
        let irf_star = structural_irf(&ma, &star).unwrap();
        let irf_chol = structural_irf(&ma, &chol).unwrap();

        let identity = RotationMatrix::identity(2);
        let same = rotate_irf(&irf_star, &identity).unwrap();
        for h in 0..=10 {
            assert_eq!(same.values[h], irf_star.values[h]);
        }

        // Rotating the OASIS IRFs by the rotation into Cholesky reproduces
        // the Cholesky IRFs.
        let r = rotation_between(&star.a, &chol.a, &model.sigma).unwrap();
        let rotated = rotate_irf(&irf_star, &r).unwrap();
        for h in 0..=10 {
            assert!(
                (&rotated.values[h] - &irf_chol.values[h]).norm() < 1e-9,
                "horizon {h}"
            );
        }

        // Rotating by R and then by R' is the identity.
        let r_back = RotationMatrix::new(r.transpose()).unwrap();
        let round_trip = rotate_irf(&rotated, &r_back).unwrap();
        for h in 0..=10 {
            assert!((&round_trip.values[h] - &irf_star.values[h]).norm() < 1e-10);
        }

        // The rotation's direction is pinned by the cross-scheme algebra:
        // the reverse rotation maps Cholesky IRFs back into OASIS IRFs.
        let r_rev = rotation_between(&chol.a, &star.a, &model.sigma).unwrap();
        let back = rotate_irf(&irf_chol, &r_rev).unwrap();
        for h in 0..=10 {
            assert!((&back.values[h] - &irf_star.values[h]).norm() < 1e-9);
        }
    }

    #[test]
    fn impact_consistency_and_variance_conservation() {
        let mut rng = sim::seeded_rng(19);
        let sigma = sim::random_covariance(4, &mut rng);
        let star = oasis(&sigma).unwrap();
        let chol = cholesky_id(&sigma, &[3, 1, 2, 0]).unwrap();
        for ident in [&star, &chol] {
            let rebuilt = &ident.b * ident.b.transpose();
            assert!((rebuilt - sigma.values()).norm() < 1e-9);
        }
        // Rotation preserves row norms at every horizon.
        for i in 0..4 {
            let s1: f64 = (0..4).map(|j| star.b[(i, j)].powi(2)).sum();
            let s2: f64 = (0..4).map(|j| chol.b[(i, j)].powi(2)).sum();
            assert!((s1 - s2).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let panel = diag_var1_panel(500, 23);
        let model = estimate_var(&panel, 1).unwrap();
        let ma = ma_coefficients(&model, 2);
        let mut rng = sim::seeded_rng(29);
        let sigma3 = sim::random_covariance(3, &mut rng);
        let ident3 = oasis(&sigma3).unwrap();
        assert!(matches!(
            structural_irf(&ma, &ident3),
            Err(crate::error::Error::DimensionMismatch { .. })
        ));
    }
}
