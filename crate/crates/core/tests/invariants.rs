//! Cross-module invariants on randomized inputs. Draw counts here are
//! sized for the regular test run; the acceptance suite repeats the
//! headline properties at full scale.

use nalgebra::{DMatrix, DVector};
use oasis_core::matprim::{
    self, cholesky_lower, corr_from_cov, dependence_level, sym_inv_sqrt, sym_sqrt, CovMatrix,
};
use oasis_core::sim;
use oasis_core::{
    cholesky_id, diagnostics, mean_corr, oasis, permutation_scan, proxy_oasis, sequential_max_corr,
    subset_oasis, DEFAULT_SCAN_BUDGET,
};
use proptest::prelude::*;
use rand::Rng;

fn frob_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[test]
fn square_roots_round_trip_on_random_pd_matrices() {
    let mut rng = sim::seeded_rng(211);
    for k in 0..1000 {
        let n = 2 + (k % 11); // dimensions 2..=12
        let sigma = sim::random_covariance(n, &mut rng);
        let s = sigma.values();

        let root = sym_sqrt(s).unwrap();
        assert!(frob_rel(&(&root * &root), s) < 1e-9);
        assert!((&root - root.transpose()).norm() < 1e-12 * root.norm().max(1.0));

        let inv_root = sym_inv_sqrt(s).unwrap();
        let sandwich = &inv_root * s * &inv_root;
        assert!(frob_rel(&sandwich, &DMatrix::identity(n, n)) < 1e-9);
        assert!(
            (&inv_root - inv_root.transpose()).norm() < 1e-12 * inv_root.norm().max(1.0)
        );

        let l = cholesky_lower(s).unwrap();
        assert!(frob_rel(&(&l * l.transpose()), s) < 1e-10);
    }
}

proptest! {
    /// Scale equivariance of the covariance/correlation split. Power-of-two
    /// scalings are exact in binary floating point, so C must match bit for
    /// bit and the sigma vector must scale exactly.
    #[test]
    fn corr_split_is_scale_equivariant(seed in 0u64..1000, exps in proptest::collection::vec(-3i32..4, 2..6)) {
        let n = exps.len();
        let mut rng = sim::seeded_rng(seed);
        let sigma = sim::random_covariance(n, &mut rng);
        let scale = DVector::from_fn(n, |i, _| 2.0f64.powi(exps[i]));
        let d = DMatrix::from_diagonal(&scale);
        let rescaled = CovMatrix::new(&d * sigma.values() * &d).unwrap();

        let base = corr_from_cov(&sigma).unwrap();
        let scaled = corr_from_cov(&rescaled).unwrap();
        prop_assert_eq!(base.corr(), scaled.corr());
        prop_assert_eq!(base.eigenvalues(), scaled.eigenvalues());
        prop_assert_eq!(base.eigenvectors(), scaled.eigenvectors());
        for i in 0..n {
            prop_assert_eq!(scaled.sigma()[i], base.sigma()[i] * scale[i]);
        }
    }

    /// The feasible set is closed under rotation.
    #[test]
    fn feasibility_closed_under_rotation(seed in 0u64..1000) {
        let mut rng = sim::seeded_rng(seed);
        let n = rng.random_range(2..7);
        let sigma = sim::random_covariance(n, &mut rng);
        let star = oasis(&sigma).unwrap();
        let r = sim::random_rotation(n, &mut rng);
        let rotated = &star.a * r;
        prop_assert!(oasis_core::ident::feasibility_defect(&rotated, &sigma) < 1e-9);
    }
}

#[test]
fn oasis_dominates_rotations() {
    let mut rng = sim::seeded_rng(223);
    for k in 0..100 {
        let n = 2 + (k % 9);
        let sigma = sim::random_covariance(n, &mut rng);
        let star = oasis(&sigma).unwrap();
        for _ in 0..20 {
            let r = sim::random_rotation(n, &mut rng);
            let value = mean_corr(&(&star.a * r), &sigma).unwrap();
            assert!(value <= star.avg_corr + 1e-10);
        }
    }
}

#[test]
fn sequential_solution_is_the_cholesky_factorization() {
    let mut rng = sim::seeded_rng(227);
    for k in 0..100 {
        let n = 2 + (k % 7);
        let sigma = sim::random_covariance(n, &mut rng);
        let seq = sequential_max_corr(&sigma).unwrap();
        let chol = cholesky_id(&sigma, &(0..n).collect::<Vec<_>>()).unwrap();
        assert!((&seq.a - &chol.a).abs().max() < 1e-8);
    }
}

#[test]
fn proximity_ratio_concentrates_near_two() {
    let mut rng = sim::seeded_rng(229);
    let mut in_range = 0;
    let draws = 100;
    for k in 0..draws {
        let n = 3 + (k % 6);
        let d_target = rng.random_range(0.01..0.35);
        let c = sim::random_correlation_with_dependence(n, d_target, &mut rng);
        let sigma = CovMatrix::new(c).unwrap();
        let diag = diagnostics(&sigma, &(0..n).collect::<Vec<_>>()).unwrap();
        let ratio = diag.proximity_ratio.unwrap();
        if (1.8..=2.25).contains(&ratio) {
            in_range += 1;
        }
        // Theorem-order remainder on both first-order expansions.
        let remainder = 3.0 * diag.d_corr.powf(1.5);
        assert!((diag.rho_star - diag.approx_star).abs() <= remainder);
        assert!((diag.rho_chol - diag.approx_chol).abs() <= remainder);
    }
    assert!(in_range * 100 >= 95 * draws, "only {in_range}/{draws} in range");
}

#[test]
fn cholesky_average_is_insensitive_to_ordering() {
    let mut rng = sim::seeded_rng(233);
    for _ in 0..10 {
        let d_target = rng.random_range(0.01..0.3);
        let c = sim::random_correlation_with_dependence(5, d_target, &mut rng);
        let sigma = CovMatrix::new(c).unwrap();
        let scan = permutation_scan(&sigma, DEFAULT_SCAN_BUDGET, 1).unwrap();
        assert!(scan.exhaustive);
        assert!(
            scan.max_rho - scan.min_rho <= 0.02,
            "range {} at d={}",
            scan.max_rho - scan.min_rho,
            dependence_level(corr_from_cov(&sigma).unwrap().corr())
        );
    }
}

#[test]
fn subset_reduction_recovers_equal_weight_objective() {
    let mut rng = sim::seeded_rng(239);
    for n in 2..7 {
        let sigma = sim::random_covariance(n, &mut rng);
        let star = oasis(&sigma).unwrap();
        let full = subset_oasis(&sigma, &(0..n).collect::<Vec<_>>()).unwrap();
        assert!((full.objective - n as f64 * star.avg_corr).abs() < 1e-10);
    }
}

#[test]
fn proxy_feasibility_over_random_instances() {
    let mut rng = sim::seeded_rng(241);
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let r = rng.random_range(1..=n);
        let sigma = sim::random_covariance(n, &mut rng);
        let cs = corr_from_cov(&sigma).unwrap();
        let c_ez = sim::random_cross_correlation(&cs.corr_sqrt(), r, 0.98, &mut rng);
        let inputs = oasis_core::ProxyInputs::new(
            sigma.clone(),
            c_ez,
            oasis_core::Weights::new(vec![1.0; r]).unwrap(),
        )
        .unwrap();
        let result = proxy_oasis(&inputs).unwrap();
        assert!(oasis_core::ident::feasibility_defect(&result.a_star, &sigma) < 1e-9);
        assert!(result
            .xi
            .iter()
            .all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }
}

#[test]
fn equicorrelation_closed_forms_match_numeric_grid() {
    for n in 2..=15usize {
        for &rho in &[-0.05, 0.1, 0.3, 0.6, 0.9] {
            let closed = oasis_core::equicorr_closed_forms(n, rho).unwrap();
            let sigma = CovMatrix::new(matprim::equicorrelation(n, rho).unwrap()).unwrap();
            let star = oasis(&sigma).unwrap();
            let chol = cholesky_id(&sigma, &(0..n).collect::<Vec<_>>()).unwrap();
            assert!((star.avg_corr - closed.rho_star).abs() < 1e-10);
            assert!((chol.avg_corr - closed.rho_chol).abs() < 1e-10);
        }
    }
}
