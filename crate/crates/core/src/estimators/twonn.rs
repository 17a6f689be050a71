use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, Estimator, EstimatorKind, IdEstimate};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::knn::knn;

/// Smallest number of non-duplicate points TwoNN will fit.
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoNNParams {
    /// Fraction of the largest `μ = r2/r1` ratios left out of the fit.
    pub discard_fraction: f64,
}

impl Default for TwoNNParams {
    fn default() -> Self {
        TwoNNParams {
            discard_fraction: 0.1,
        }
    }
}

/// TwoNN estimate: fits `-ln(1 - F(μ)) = d ln μ` through the origin, where
/// `F` is the empirical CDF of the neighbor-distance ratios.
pub fn twonn_id(x: &DataMatrix, params: TwoNNParams) -> Result<IdEstimate> {
    let f = params.discard_fraction;
    if !(0.0..1.0).contains(&f) {
        return Err(Error::InvalidParameter(format!(
            "discard_fraction {f} outside [0, 1)"
        )));
    }
    if x.n_rows() < 3 {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            available: x.n_rows(),
        });
    }
    let table = knn(x, 2)?;
    let n = table.len();
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            available: n,
        });
    }

    // Ratio of squared distances: exact under power-of-two rescaling.
    let mut mu: Vec<f64> = table
        .iter_squared()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|d| (d[1] / d[0]).sqrt())
        .collect();
    mu.sort_unstable_by(f64::total_cmp);
    if mu[n - 1] <= 1.0 {
        return Err(Error::Degenerate(
            "every point has equidistant first and second neighbors".into(),
        ));
    }

    let n_fit = n - (f * n as f64).ceil() as usize;
    let n_f = n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut points = Vec::with_capacity(n_fit);
    for (i, &m) in mu[..n_fit].iter().enumerate() {
        let lx = m.ln();
        let ly = -(1.0 - (i + 1) as f64 / n_f).ln();
        sxy += lx * ly;
        sxx += lx * lx;
        points.push((lx, ly));
    }
    if sxx <= 0.0 || !sxy.is_finite() {
        return Err(Error::Degenerate(
            "no spread in ln(mu) over the fitted range".into(),
        ));
    }
    let d = sxy / sxx;
    let residual = points.iter().map(|(a, b)| (b - d * a).powi(2)).sum();
    Ok(IdEstimate {
        value: d,
        estimator: EstimatorKind::Twonn,
        n_used: n,
        params: Estimator::Twonn(params),
        diagnostics: Diagnostics {
            excluded_duplicates: table.excluded().len(),
            fit_residual: Some(residual),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::concat_features;
    use crate::rng::RngSeed;
    use rand::Rng;

    fn uniform(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = RngSeed(seed).rng();
        DataMatrix::new(n, d, (0..n * d).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn discard_out_of_range_rejected() {
        let x = uniform(50, 2, 0);
        for f in [-0.1, 1.0, 1.5] {
            assert!(twonn_id(
                &x,
                TwoNNParams {
                    discard_fraction: f
                }
            )
            .is_err());
        }
    }

    #[test]
    fn too_few_points() {
        let x = uniform(9, 2, 0);
        assert!(matches!(
            twonn_id(&x, TwoNNParams::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn lattice_is_degenerate() {
        // Evenly spaced line: every interior point has r1 == r2, the two ends
        // have mu = 2, so drop enough of the tail to leave only mu = 1.
        let x = DataMatrix::new(40, 1, (0..40).map(|i| i as f64).collect()).unwrap();
        let err = twonn_id(
            &x,
            TwoNNParams {
                discard_fraction: 0.1,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn scale_and_duplication_are_exact() {
        let x = uniform(500, 3, 4);
        let base = twonn_id(&x, TwoNNParams::default()).unwrap().value;
        for c in [0.25, 2.0, 1024.0] {
            let v = twonn_id(&x.scaled(c).unwrap(), TwoNNParams::default())
                .unwrap()
                .value;
            assert_eq!(v, base);
        }
        let xx = concat_features(&x, &x).unwrap();
        assert_eq!(twonn_id(&xx, TwoNNParams::default()).unwrap().value, base);
    }

    #[test]
    fn reports_duplicates() {
        let mut rows: Vec<Vec<f64>> = uniform(100, 2, 1).rows().map(<[f64]>::to_vec).collect();
        rows.push(rows[0].clone());
        let x = DataMatrix::from_rows(&rows).unwrap();
        let est = twonn_id(&x, TwoNNParams::default()).unwrap();
        assert_eq!(est.diagnostics.excluded_duplicates, 2);
        assert_eq!(est.n_used, 99);
    }
}
