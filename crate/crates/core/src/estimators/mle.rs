use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, Estimator, EstimatorKind, IdEstimate};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::knn::knn;

/// How per-point estimates are pooled into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MleAggregation {
    /// `1 / mean(1 / m_k(x_i))`.
    #[default]
    InverseMean,
    /// `mean(m_k(x_i))`.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleParams {
    pub k: usize,
    #[serde(default)]
    pub aggregation: MleAggregation,
}

impl Default for MleParams {
    fn default() -> Self {
        MleParams {
            k: 100,
            aggregation: MleAggregation::InverseMean,
        }
    }
}

impl MleParams {
    pub fn with_k(k: usize) -> Self {
        MleParams {
            k,
            ..Self::default()
        }
    }
}

/// Levina–Bickel maximum-likelihood estimate over `k` neighbors.
pub fn mle_id(x: &DataMatrix, params: MleParams) -> Result<IdEstimate> {
    let k = params.k;
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "mle needs k >= 2, got {k}"
        )));
    }
    let table = knn(x, k)?;
    let n = table.len();
    if n < k + 1 {
        return Err(Error::TooFewPoints {
            needed: k + 1,
            available: n,
        });
    }

    // Inverse of the per-point estimate: mean of ln(T_k / T_j), j < k.
    let inv: Vec<f64> = table
        .iter_squared()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| {
            let last = s[k - 1];
            let sum: f64 = s[..k - 1].iter().map(|sj| (last / sj).ln()).sum();
            0.5 * sum / (k - 1) as f64
        })
        .collect();

    let value = match params.aggregation {
        MleAggregation::InverseMean => {
            let mean = inv.iter().sum::<f64>() / n as f64;
            if mean <= 0.0 {
                return Err(Error::Degenerate(
                    "all neighbor distances equal within every neighborhood".into(),
                ));
            }
            1.0 / mean
        }
        MleAggregation::Mean => {
            if inv.iter().any(|&v| v <= 0.0) {
                return Err(Error::Degenerate(
                    "a neighborhood has all distances equal".into(),
                ));
            }
            inv.iter().map(|v| 1.0 / v).sum::<f64>() / n as f64
        }
    };
    Ok(IdEstimate {
        value,
        estimator: EstimatorKind::Mle,
        n_used: n,
        params: Estimator::Mle(params),
        diagnostics: Diagnostics {
            excluded_duplicates: table.excluded().len(),
            fit_residual: None,
        },
    })
}
