use nalgebra::DMatrix;

use super::{centered, check_rows, BaselineMethod, BaselineResult};
use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Ridge added to both covariance matrices before whitening.
pub const CCA_RIDGE: f64 = 1e-10;

/// `C^{-1/2}` of a symmetric positive semi-definite matrix, plus its
/// smallest-to-largest eigenvalue ratio.
fn inv_sqrt(c: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let eig = c.symmetric_eigen();
    let top = eig.eigenvalues.max();
    let low = eig.eigenvalues.min();
    let scale = eig
        .eigenvalues
        .map(|l| 1.0 / (l.max(0.0) + CCA_RIDGE).sqrt());
    let v = &eig.eigenvectors;
    let w = v * DMatrix::from_diagonal(&scale) * v.transpose();
    (w, if top > 0.0 { low / top } else { 0.0 })
}

fn cca_on(xc: &DMatrix<f64>, yc: &DMatrix<f64>) -> (Vec<f64>, Option<String>) {
    let n = xc.nrows() as f64 - 1.0;
    let cxx = xc.transpose() * xc / n + DMatrix::identity(xc.ncols(), xc.ncols()) * CCA_RIDGE;
    let cyy = yc.transpose() * yc / n + DMatrix::identity(yc.ncols(), yc.ncols()) * CCA_RIDGE;
    let cxy = xc.transpose() * yc / n;
    let (wx, rx) = inv_sqrt(cxx);
    let (wy, ry) = inv_sqrt(cyy);
    let t = wx * cxy * wy;
    let mut sv: Vec<f64> = t.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.truncate(xc.ncols().min(yc.ncols()));
    let diagnostic = (rx < 1e-12 || ry < 1e-12)
        .then(|| "covariance is rank deficient; ridge-regularized".to_string());
    (sv, diagnostic)
}

fn check_shape(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    check_rows(x, y)?;
    let d = x.n_cols().max(y.n_cols());
    if x.n_rows() <= d {
        return Err(Error::Shape(format!(
            "cca needs more rows ({}) than columns ({d})",
            x.n_rows()
        )));
    }
    Ok(())
}

/// All `min(d1, d2)` canonical correlations, descending.
pub fn canonical_correlations(x: &DataMatrix, y: &DataMatrix) -> Result<Vec<f64>> {
    check_shape(x, y)?;
    Ok(cca_on(&centered(x), &centered(y)).0)
}

/// Mean canonical correlation.
pub fn cca_mean(x: &DataMatrix, y: &DataMatrix) -> Result<BaselineResult> {
    check_shape(x, y)?;
    let (sv, diagnostic) = cca_on(&centered(x), &centered(y));
    Ok(BaselineResult {
        value: sv.iter().sum::<f64>() / sv.len() as f64,
        method: BaselineMethod::Cca,
        diagnostic,
    })
}

/// Projects onto the leading right singular vectors that together carry
/// `variance_kept` of the squared singular-value mass.
fn truncate(xc: DMatrix<f64>, variance_kept: f64) -> DMatrix<f64> {
    let svd = xc.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let energy: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i].powi(2))
        .collect();
    let total: f64 = energy.iter().sum();
    let keep = if variance_kept >= 1.0 || total <= 0.0 {
        order.len()
    } else {
        let mut cum = 0.0;
        let mut r = order.len();
        for (i, e) in energy.iter().enumerate() {
            cum += e;
            if cum >= variance_kept * total {
                r = i + 1;
                break;
            }
        }
        r
    };
    let basis = DMatrix::from_fn(xc.ncols(), keep, |row, c| vt[(order[c], row)]);
    xc * basis
}

/// SVD truncation of each side followed by mean CCA.
pub fn svcca(x: &DataMatrix, y: &DataMatrix, variance_kept: f64) -> Result<BaselineResult> {
    if !(variance_kept > 0.0 && variance_kept <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance_kept {variance_kept} outside (0, 1]"
        )));
    }
    check_shape(x, y)?;
    let xt = truncate(centered(x), variance_kept);
    let yt = truncate(centered(y), variance_kept);
    let (sv, diagnostic) = cca_on(&xt, &yt);
    Ok(BaselineResult {
        value: sv.iter().sum::<f64>() / sv.len() as f64,
        method: BaselineMethod::Svcca { variance_kept },
        diagnostic,
    })
}
