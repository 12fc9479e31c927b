//! Deterministic simulation helpers: VAR sample paths and seeded random
//! matrices (rotations, covariances, correlation matrices with a target
//! dependence level) used by synthetic studies and tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matprim::{self, CovMatrix};

/// Seeded RNG used everywhere a seed is accepted, so results are stable
/// across platforms and runs.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of iid standard normal draws.
pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed random rotation: QR of a Gaussian matrix with the R
/// diagonal sign absorbed into Q.
pub fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Planar rotation by `theta` in coordinates `(i, j)` of an n-dimensional
/// identity.
pub fn planar_rotation(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(n, n);
    r[(i, i)] = theta.cos();
    r[(j, j)] = theta.cos();
    r[(i, j)] = -theta.sin();
    r[(j, i)] = theta.sin();
    r
}

/// Well-conditioned random covariance: random rotation, eigenvalues in
/// [0.3, 3], then a random positive diagonal rescaling in [0.5, 2].
pub fn random_covariance<R: Rng>(n: usize, rng: &mut R) -> CovMatrix {
    let q = random_rotation(n, rng);
    let eigs = DVector::from_fn(n, |_, _| rng.random_range(0.3..3.0));
    let scales = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    let core = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    let d = DMatrix::from_diagonal(&scales);
    CovMatrix::new(&d * core * d).expect("constructed covariance is positive definite")
}

/// Random correlation matrix from the Gram matrix of `n` unit vectors in
/// `k` dimensions.
pub fn random_correlation_gram<R: Rng>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = gaussian_matrix(n, k, rng);
        let gram = &g * g.transpose();
        let mut ok = true;
        let mut corr = DMatrix::zeros(n, n);
        for i in 0..n {
            if gram[(i, i)] <= 0.0 {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                corr[(i, j)] = gram[(i, j)] / (gram[(i, i)] * gram[(j, j)]).sqrt();
            }
            corr[(i, i)] = 1.0;
        }
        if matprim::CovMatrix::new(corr.clone()).is_ok() {
            return corr;
        }
    }
}

/// Random correlation matrix with the off-diagonal block shrunk toward the
/// identity so that its dependence level is exactly `d_target`.
///
/// Shrinking `C = I + a (C0 - I)` scales the dependence level by `a^2`, so
/// the target is hit exactly (up to rounding) whenever the raw Gram draw
/// has enough dependence; draws that fall short are rejected.
pub fn random_correlation_with_dependence<R: Rng>(
    n: usize,
    d_target: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    loop {
        let c0 = random_correlation_gram(n, n + 2, rng);
        let d0 = matprim::dependence_level(&c0);
        if d0 < d_target {
            continue;
        }
        let alpha = (d_target / d0).sqrt();
        let mut c = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[(i, j)] = alpha * c0[(i, j)];
                }
            }
        }
        if matprim::CovMatrix::new(c.clone()).is_ok() {
            return c;
        }
    }
}

/// Random cross-correlation matrix `corr(eps, z)` that is jointly
/// consistent with the correlation matrix `corr` of `eps` and with
/// mutually uncorrelated instruments `z`.
///
/// Writing `C_ez = C^{1/2} G`, joint positive semidefiniteness with
/// `corr(z) = I` holds exactly when the spectral norm of `G` is at most
/// one; `G` is drawn Gaussian and rescaled to a spectral norm in
/// `(0, max_strength]`.
pub fn random_cross_correlation<R: Rng>(
    corr_sqrt: &DMatrix<f64>,
    r: usize,
    max_strength: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let n = corr_sqrt.nrows();
    let g = gaussian_matrix(n, r, rng);
    let top = g.clone().svd(false, false).singular_values[0];
    let strength = rng.random_range(0.05..max_strength);
    corr_sqrt * g * (strength / top)
}

/// Uniform random permutation of `0..n`.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Simulates a Gaussian VAR(p) path of length `t_obs` after discarding
/// `burn_in` initial observations. Innovations are `L nu` with `L` the
/// Cholesky factor of `sigma`.
pub fn simulate_var(
    mu: &DVector<f64>,
    phi: &[DMatrix<f64>],
    sigma: &CovMatrix,
    t_obs: usize,
    burn_in: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let n = mu.len();
    if sigma.dim() != n || phi.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::DimensionMismatch {
            detail: "mu, phi, and sigma dimensions must agree".to_string(),
        });
    }
    let p = phi.len();
    let chol = matprim::cholesky_lower(sigma.values())?;
    let mut rng = seeded_rng(seed);
    let total = t_obs + burn_in;
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(n); p.max(1)];
    let mut out = DMatrix::zeros(t_obs, n);
    for t in 0..total {
        let nu = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let mut x = mu + &chol * nu;
        for (lag, coef) in phi.iter().enumerate() {
            x += coef * &history[lag];
        }
        if t >= burn_in {
            out.row_mut(t - burn_in).copy_from(&x.transpose());
        }
        if p > 0 {
            history.rotate_right(1);
            history[0] = x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matprim::orthonormality_defect;

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = seeded_rng(7);
        for n in 2..8 {
            let q = random_rotation(n, &mut rng);
            assert!(orthonormality_defect(&q) < 1e-12);
        }
    }

    #[test]
    fn dependence_target_is_hit() {
        let mut rng = seeded_rng(11);
        for &d in &[0.02, 0.1, 0.3] {
            let c = random_correlation_with_dependence(5, d, &mut rng);
            assert!((matprim::dependence_level(&c) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let mu = DVector::from_vec(vec![0.1, -0.2]);
        let phi = vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.3])];
        let sigma = CovMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let a = simulate_var(&mu, &phi, &sigma, 50, 10, 42).unwrap();
        let b = simulate_var(&mu, &phi, &sigma, 50, 10, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_var(&mu, &phi, &sigma, 50, 10, 43).unwrap();
        assert_ne!(a, c);
    }
}
