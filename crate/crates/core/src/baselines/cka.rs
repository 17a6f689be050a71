use rayon::prelude::*;

use super::{centered, check_rows, BaselineMethod, BaselineResult};
use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Above this many rows the RBF bandwidth median is taken over an evenly
/// strided subset of rows, keeping its pair buffer near 150 MB.
pub const MEDIAN_MAX_ROWS: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { bandwidth_multiplier: f64 },
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median Euclidean distance over distinct row pairs.
pub fn median_pairwise_distance(x: &DataMatrix) -> f64 {
    let n = x.n_rows();
    let rows: Vec<usize> = if n > MEDIAN_MAX_ROWS {
        (0..MEDIAN_MAX_ROWS)
            .map(|i| i * n / MEDIAN_MAX_ROWS)
            .collect()
    } else {
        (0..n).collect()
    };
    let mut d: Vec<f64> = rows
        .par_iter()
        .enumerate()
        .flat_map_iter(|(a, &i)| {
            rows[a + 1..]
                .iter()
                .map(move |&j| sq_dist(x.row(i), x.row(j)))
        })
        .collect();
    let m = d.len();
    let mid = m / 2;
    let (_, &mut hi, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if m % 2 == 1 {
        hi.sqrt()
    } else {
        let lo = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo.sqrt() + hi.sqrt())
    }
}

fn linear_cka(x: &DataMatrix, y: &DataMatrix) -> (f64, Option<String>) {
    let (xc, yc) = (centered(x), centered(y));
    let cross = yc.transpose() * &xc;
    let xx = xc.transpose() * &xc;
    let yy = yc.transpose() * &yc;
    let denom = xx.norm() * yy.norm();
    if denom > 0.0 {
        (cross.norm_squared() / denom, None)
    } else {
        (0.0, Some("zero HSIC self-term".into()))
    }
}

/// Sums of `K∘L`, `K∘K`, `L∘L` over double-centered Gram matrices, built row
/// by row so only O(n) memory is held.
fn rbf_cka(x: &DataMatrix, y: &DataMatrix, mult: f64) -> Result<(f64, Option<String>)> {
    if !(mult > 0.0 && mult.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth multiplier {mult} must be positive"
        )));
    }
    let n = x.n_rows();
    let sx = mult * median_pairwise_distance(x);
    let sy = mult * median_pairwise_distance(y);
    if sx <= 0.0 || sy <= 0.0 {
        return Ok((0.0, Some("zero median distance".into())));
    }
    let (gx, gy) = (-0.5 / (sx * sx), -0.5 / (sy * sy));
    let kx = |i: usize, j: usize| (gx * sq_dist(x.row(i), x.row(j))).exp();
    let ky = |i: usize, j: usize| (gy * sq_dist(y.row(i), y.row(j))).exp();

    let means: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..n {
                a += kx(i, j);
                b += ky(i, j);
            }
            (a / n as f64, b / n as f64)
        })
        .collect();
    let ga = means.iter().map(|m| m.0).sum::<f64>() / n as f64;
    let gb = means.iter().map(|m| m.1).sum::<f64>() / n as f64;

    let partial: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 3];
            for j in 0..n {
                let a = kx(i, j) - means[i].0 - means[j].0 + ga;
                let b = ky(i, j) - means[i].1 - means[j].1 + gb;
                acc[0] += a * b;
                acc[1] += a * a;
                acc[2] += b * b;
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 3];
    for p in &partial {
        for (t, v) in tot.iter_mut().zip(p) {
            *t += v;
        }
    }
    let denom = (tot[1] * tot[2]).sqrt();
    Ok(if denom > 0.0 {
        (tot[0] / denom, None)
    } else {
        (0.0, Some("zero HSIC self-term".into()))
    })
}

/// Centered kernel alignment `HSIC(K, L) / sqrt(HSIC(K, K) HSIC(L, L))`.
pub fn cka(x: &DataMatrix, y: &DataMatrix, kernel: Kernel) -> Result<BaselineResult> {
    check_rows(x, y)?;
    let ((value, diagnostic), method) = match kernel {
        Kernel::Linear => (linear_cka(x, y), BaselineMethod::CkaLinear),
        Kernel::Rbf {
            bandwidth_multiplier,
        } => (
            rbf_cka(x, y, bandwidth_multiplier)?,
            BaselineMethod::CkaRbf {
                bandwidth_multiplier,
            },
        ),
    };
    Ok(BaselineResult {
        value,
        method,
        diagnostic,
    })
}
