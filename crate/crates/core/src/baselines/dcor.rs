use rayon::prelude::*;

use super::{check_rows, BaselineMethod, BaselineResult};
use crate::data::DataMatrix;
use crate::error::Result;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn row_means(x: &DataMatrix) -> Vec<f64> {
    let n = x.n_rows() as f64;
    (0..x.n_rows())
        .into_par_iter()
        .map(|i| {
            let q = x.row(i);
            x.rows().map(|p| dist(q, p)).sum::<f64>() / n
        })
        .collect()
}

/// Sample distance correlation in the squared V-statistic form:
/// `dCov²(X, Y) / sqrt(dVar²(X) dVar²(Y))` over double-centered distance
/// matrices. Distance matrices are never materialized.
pub fn dcor(x: &DataMatrix, y: &DataMatrix) -> Result<BaselineResult> {
    check_rows(x, y)?;
    let n = x.n_rows();
    let ra = row_means(x);
    let rb = row_means(y);
    let ga = ra.iter().sum::<f64>() / n as f64;
    let gb = rb.iter().sum::<f64>() / n as f64;

    let partial: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, yi) = (x.row(i), y.row(i));
            let mut acc = [0.0; 3];
            for j in 0..n {
                let a = dist(xi, x.row(j)) - ra[i] - ra[j] + ga;
                let b = dist(yi, y.row(j)) - rb[i] - rb[j] + gb;
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
    let (value, diagnostic) = if denom > 0.0 {
        (tot[0] / denom, None)
    } else {
        (0.0, Some("zero distance variance".to_string()))
    };
    Ok(BaselineResult {
        value,
        method: BaselineMethod::Dcor,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Materialized double-centering, straight from the definition.
    fn dcor_dense(x: &DataMatrix, y: &DataMatrix) -> f64 {
        let n = x.n_rows();
        let center = |m: &DataMatrix| {
            let d: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| dist(m.row(i), m.row(j))).collect())
                .collect();
            let rm: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
            let g = rm.iter().sum::<f64>() / n as f64;
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| d[i][j] - rm[i] - rm[j] + g)
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        let (a, b) = (center(x), center(y));
        let mut s = [0.0; 3];
        for i in 0..n {
            for j in 0..n {
                s[0] += a[i][j] * b[i][j];
                s[1] += a[i][j] * a[i][j];
                s[2] += b[i][j] * b[i][j];
            }
        }
        s[0] / (s[1] * s[2]).sqrt()
    }

    #[test]
    fn matches_dense_definition() {
        let x = DataMatrix::from_rows(&[
            vec![0.0, 1.0],
            vec![2.0, -1.0],
            vec![1.5, 0.3],
            vec![-0.7, 2.2],
            vec![0.1, 0.1],
        ])
        .unwrap();
        let y = DataMatrix::new(5, 1, vec![0.3, -1.0, 4.0, 0.0, 2.0]).unwrap();
        let v = dcor(&x, &y).unwrap().value;
        assert!((v - dcor_dense(&x, &y)).abs() < 1e-12);
        assert!((dcor(&x, &x).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_gives_zero() {
        let x = DataMatrix::new(4, 1, vec![1.0; 4]).unwrap();
        let y = DataMatrix::new(4, 1, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let r = dcor(&x, &y).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.diagnostic.is_some());
    }
}
