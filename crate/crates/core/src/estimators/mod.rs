//! Intrinsic-dimension estimators.

mod mle;
mod pca;
mod twonn;

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::Result;

pub use mle::{mle_id, MleAggregation, MleParams};
pub use pca::{covariance_eigenvalues, pca_id, DEFAULT_EIGEN_TOLERANCE};
pub use twonn::{twonn_id, TwoNNParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Twonn,
    Mle,
    Pca,
}

/// Parameters of the estimator that produced an [`IdEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum Estimator {
    Twonn(TwoNNParams),
    Mle(MleParams),
    Pca { eigen_tolerance: f64 },
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Twonn(TwoNNParams::default())
    }
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::Twonn(_) => EstimatorKind::Twonn,
            Estimator::Mle(_) => EstimatorKind::Mle,
            Estimator::Pca { .. } => EstimatorKind::Pca,
        }
    }

    pub fn pca() -> Self {
        Estimator::Pca {
            eigen_tolerance: DEFAULT_EIGEN_TOLERANCE,
        }
    }

    pub fn estimate(&self, x: &DataMatrix) -> Result<IdEstimate> {
        match *self {
            Estimator::Twonn(p) => twonn_id(x, p),
            Estimator::Mle(p) => mle_id(x, p),
            Estimator::Pca { eigen_tolerance } => pca_id(x, eigen_tolerance),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub excluded_duplicates: usize,
    /// Residual sum of squares of the TwoNN line fit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    pub value: f64,
    pub estimator: EstimatorKind,
    pub n_used: usize,
    pub params: Estimator,
    pub diagnostics: Diagnostics,
}
