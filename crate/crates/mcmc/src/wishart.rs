use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::KernelError;

/// Draw from the inverse-Wishart distribution with `nu` degrees of freedom
/// and scale matrix `psi`.
///
/// The draw goes through the Bartlett decomposition of a
/// `Wishart(nu, psi^-1)` variate, which is then inverted: with `M` the lower
/// Cholesky factor of `psi^-1` and `A` lower triangular with
/// `A[i][i]^2 ~ ChiSquared(nu - i)` and `A[i][j] ~ Normal(0, 1)` below the
/// diagonal, `X = (M A)(M A)^T` is Wishart and `X^-1` is the inverse-Wishart
/// draw. The output is symmetrized and positive definite by construction.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    nu: f64,
    psi: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>, KernelError> {
    let p = psi.nrows();
    if psi.ncols() != p {
        return Err(KernelError::Dimension { expected: p, got: psi.ncols() });
    }
    if nu <= p as f64 - 1.0 {
        return Err(KernelError::BadDegreesOfFreedom { nu, dim: p });
    }
    let psi_chol = Cholesky::new(psi.clone()).ok_or(KernelError::NotPositiveDefinite)?;
    let psi_inv = psi_chol.inverse();
    let m = Cholesky::new(psi_inv).ok_or(KernelError::NotPositiveDefinite)?;

    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(nu - i as f64).expect("validated degrees of freedom");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        }
    }

    let factor = m.l() * a;
    let wishart = &factor * factor.transpose();
    let inv = Cholesky::new(wishart)
        .ok_or(KernelError::NotPositiveDefinite)?
        .inverse();
    // Symmetrize to scrub accumulated round-off before downstream Cholesky.
    Ok((&inv + inv.transpose()) * 0.5)
}
