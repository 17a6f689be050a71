use nalgebra::DMatrix;

use super::{Diagnostics, Estimator, EstimatorKind, IdEstimate};
use crate::data::DataMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_EIGEN_TOLERANCE: f64 = 1e-8;

/// Eigenvalues of the sample covariance matrix, descending.
pub fn covariance_eigenvalues(x: &DataMatrix) -> Vec<f64> {
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut mean = vec![0.0; d];
    for r in x.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// Rank-style estimate: how many covariance eigenvalues exceed
/// `eigen_tolerance` times the largest one.
pub fn pca_id(x: &DataMatrix, eigen_tolerance: f64) -> Result<IdEstimate> {
    if !(eigen_tolerance >= 0.0 && eigen_tolerance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eigen tolerance {eigen_tolerance} must be finite and >= 0"
        )));
    }
    let eig = covariance_eigenvalues(x);
    let top = eig.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 {
        eig.iter().filter(|&&v| v > eigen_tolerance * top).count()
    } else {
        0
    };
    Ok(IdEstimate {
        value: rank as f64,
        estimator: EstimatorKind::Pca,
        n_used: x.n_rows(),
        params: Estimator::Pca { eigen_tolerance },
        diagnostics: Diagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = RngSeed(seed).rng();
        DataMatrix::new(
            n,
            d,
            (0..n * d)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let x = DataMatrix::new(5, 3, vec![0.0; 15]).unwrap();
        assert_eq!(pca_id(&x, DEFAULT_EIGEN_TOLERANCE).unwrap().value, 0.0);
    }

    #[test]
    fn full_rank_gaussian() {
        let x = gaussian(400, 6, 1);
        assert_eq!(pca_id(&x, DEFAULT_EIGEN_TOLERANCE).unwrap().value, 6.0);
    }

    #[test]
    fn duplicated_columns_do_not_add_rank() {
        let x = gaussian(100, 2, 2);
        let xx = crate::data::concat_features(&x, &x).unwrap();
        assert_eq!(pca_id(&xx, DEFAULT_EIGEN_TOLERANCE).unwrap().value, 2.0);
        assert!(pca_id(&x, -1.0).is_err());
    }
}
