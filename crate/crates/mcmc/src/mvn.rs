use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::KernelError;

/// Draw `Normal(mean, cov)`.
///
/// Uses the Cholesky factor of `cov`; if `cov` is only positive
/// semi-definite (e.g. a near-singular estimated covariance), falls back to a
/// symmetric eigendecomposition with negative eigenvalues clamped to zero.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>, KernelError> {
    let n = mean.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(KernelError::Dimension { expected: n, got: cov.nrows() });
    }
    let z = DVector::from_iterator(
        n,
        (0..n).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)),
    );
    let factor = match Cholesky::new(cov.clone()) {
        Some(chol) => chol.l(),
        None => {
            let sym = (cov + cov.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            let mut scaled = eig.eigenvectors.clone();
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                let s = lambda.max(0.0).sqrt();
                scaled.column_mut(j).scale_mut(s);
            }
            scaled
        }
    };
    Ok(mean + factor * z)
}
