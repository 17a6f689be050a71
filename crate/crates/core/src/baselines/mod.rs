//! Reference similarity indices: distance correlation, linear and RBF CKA,
//! mean canonical correlation and SVCCA.

mod cca;
mod cka;
mod dcor;

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

pub use cca::{canonical_correlations, cca_mean, svcca, CCA_RIDGE};
pub use cka::{cka, median_pairwise_distance, Kernel};
pub use dcor::dcor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BaselineMethod {
    Dcor,
    CkaLinear,
    CkaRbf { bandwidth_multiplier: f64 },
    Cca,
    Svcca { variance_kept: f64 },
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Dcor => "dcor",
            BaselineMethod::CkaLinear => "cka_linear",
            BaselineMethod::CkaRbf { .. } => "cka_rbf",
            BaselineMethod::Cca => "cca",
            BaselineMethod::Svcca { .. } => "svcca",
        }
    }

    pub fn compute(&self, x: &DataMatrix, y: &DataMatrix) -> Result<BaselineResult> {
        match *self {
            BaselineMethod::Dcor => dcor(x, y),
            BaselineMethod::CkaLinear => cka(x, y, Kernel::Linear),
            BaselineMethod::CkaRbf {
                bandwidth_multiplier,
            } => cka(
                x,
                y,
                Kernel::Rbf {
                    bandwidth_multiplier,
                },
            ),
            BaselineMethod::Cca => cca_mean(x, y),
            BaselineMethod::Svcca { variance_kept } => svcca(x, y, variance_kept),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub value: f64,
    #[serde(flatten)]
    pub method: BaselineMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

pub(crate) fn check_rows(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::RowMismatch {
            left: "X".into(),
            left_rows: x.n_rows(),
            right: "Y".into(),
            right_rows: y.n_rows(),
        });
    }
    Ok(())
}

/// Column means subtracted, as an nalgebra matrix.
pub(crate) fn centered(x: &DataMatrix) -> nalgebra::DMatrix<f64> {
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut m = nalgebra::DMatrix::from_fn(n, d, |i, j| x.get(i, j));
    for mut c in m.column_iter_mut() {
        let mean = c.sum() / n as f64;
        c.add_scalar_mut(-mean);
    }
    m
}
