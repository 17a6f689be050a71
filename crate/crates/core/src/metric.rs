//! The intrinsic-dimension correlation coefficient, its permutation
//! p-value, and pairwise matrices over collections of datasets.
//!
//! ```text
//! rho(X, Y) = (Id(X) + Id(Y) - Id(X ⊕ Y)) / max(Id(X), Id(Y))
//! ```
//!
//! Both inputs are standardized column-wise first. The joint dataset is the
//! concatenation of the standardized parts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineMethod;
use crate::data::{concat_features, shuffle_rows, standardize, DataMatrix, ShuffleMode};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, IdEstimate};
use crate::rng::RngSeed;

pub const DEFAULT_PERMUTATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rho: f64,
    pub id_x: IdEstimate,
    pub id_y: IdEstimate,
    pub id_joint: IdEstimate,
    pub p_value: Option<f64>,
    pub n_permutations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation_joint_ids: Option<Vec<f64>>,
    /// Permuted joint estimates exactly equal to the observed one. These are
    /// not counted as lower.
    pub permutation_ties: usize,
    pub seed: RngSeed,
}

pub fn coefficient(id_x: f64, id_y: f64, id_joint: f64) -> f64 {
    (id_x + id_y - id_joint) / id_x.max(id_y)
}

/// `(L + 1) / (S + 1)` with `L` the count of samples strictly below `observed`.
pub fn permutation_p_value(observed: f64, samples: &[f64]) -> f64 {
    let lower = samples.iter().filter(|&&v| v < observed).count();
    (lower + 1) as f64 / (samples.len() + 1) as f64
}

/// A standardized dataset with its own Id already estimated.
struct Prepared {
    data: DataMatrix,
    id: IdEstimate,
}

fn prepare(x: &DataMatrix, estimator: &Estimator, stage: &str) -> Result<Prepared> {
    let data = standardize(x)?.without_labels();
    let id = estimator.estimate(&data).map_err(|e| e.context(stage))?;
    Ok(Prepared { data, id })
}

fn check_pair(x: &DataMatrix, y: &DataMatrix, lx: &str, ly: &str) -> Result<()> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::RowMismatch {
            left: lx.into(),
            left_rows: x.n_rows(),
            right: ly.into(),
            right_rows: y.n_rows(),
        });
    }
    Ok(())
}

fn joint_report(
    px: &Prepared,
    py: &Prepared,
    estimator: &Estimator,
    permutations: usize,
    seed: RngSeed,
) -> Result<CorrelationReport> {
    let joint = concat_features(&px.data, &py.data)?;
    let id_joint = estimator
        .estimate(&joint)
        .map_err(|e| e.context("Id(X ⊕ Y)"))?;
    let rho = coefficient(px.id.value, py.id.value, id_joint.value);

    let (p_value, samples, ties) = if permutations > 0 {
        let samples = (1..=permutations as u64)
            .into_par_iter()
            .map(|s| {
                let shuffled = shuffle_rows(&py.data, ShuffleMode::Full, seed.derive(s))?;
                let joint = concat_features(&px.data, &shuffled)?;
                estimator
                    .estimate(&joint)
                    .map(|e| e.value)
                    .map_err(|e| e.context(format!("Id(X ⊕ Y) permutation {s}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let ties = samples.iter().filter(|&&v| v == id_joint.value).count();
        (
            Some(permutation_p_value(id_joint.value, &samples)),
            Some(samples),
            ties,
        )
    } else {
        (None, None, 0)
    };

    Ok(CorrelationReport {
        rho,
        id_x: px.id.clone(),
        id_y: py.id.clone(),
        id_joint,
        p_value,
        n_permutations: permutations,
        permutation_joint_ids: samples,
        permutation_ties: ties,
        seed,
    })
}

/// The coefficient alone, from exactly three estimator calls.
pub fn idcor(x: &DataMatrix, y: &DataMatrix, estimator: &Estimator) -> Result<CorrelationReport> {
    check_pair(x, y, "X", "Y")?;
    let px = prepare(x, estimator, "Id(X)")?;
    let py = prepare(y, estimator, "Id(Y)")?;
    joint_report(&px, &py, estimator, 0, RngSeed::default())
}

/// The coefficient plus a p-value from `permutations` random re-pairings of
/// `y`. Only the joint estimate is recomputed per permutation.
pub fn permutation_test(
    x: &DataMatrix,
    y: &DataMatrix,
    permutations: usize,
    seed: RngSeed,
    estimator: &Estimator,
) -> Result<CorrelationReport> {
    if permutations == 0 {
        return Err(Error::InvalidParameter(
            "permutation test needs at least one permutation".into(),
        ));
    }
    check_pair(x, y, "X", "Y")?;
    let px = prepare(x, estimator, "Id(X)")?;
    let py = prepare(y, estimator, "Id(Y)")?;
    joint_report(&px, &py, estimator, permutations, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixMethod {
    Idcor {
        estimator: Estimator,
        permutations: usize,
        seed: RngSeed,
    },
    Baseline {
        method: BaselineMethod,
    },
}

impl MatrixMethod {
    pub fn name(&self) -> String {
        match self {
            MatrixMethod::Idcor { .. } => "idcor".into(),
            MatrixMethod::Baseline { method } => method.name().into(),
        }
    }
}

/// Symmetric labeled coefficient matrix. The diagonal is 1 by convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub rho: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<Option<f64>>>>,
    pub method: String,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Mean of the strict upper triangle.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.len();
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += self.rho[i][j];
            }
        }
        sum / (n * (n - 1) / 2) as f64
    }
}

pub fn correlate_matrix(
    datasets: &[(String, DataMatrix)],
    method: &MatrixMethod,
) -> Result<CorrelationMatrix> {
    let n = datasets.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "correlation matrix needs at least 2 datasets".into(),
        ));
    }
    for (label, d) in &datasets[1..] {
        check_pair(&datasets[0].1, d, &datasets[0].0, label)?;
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();

    let cells: Vec<(f64, Option<f64>)> = match method {
        MatrixMethod::Idcor {
            estimator,
            permutations,
            seed,
        } => {
            let prepared = datasets
                .par_iter()
                .map(|(label, d)| prepare(d, estimator, &format!("Id({label})")))
                .collect::<Result<Vec<_>>>()?;
            pairs
                .par_iter()
                .enumerate()
                .map(|(cell, &(i, j))| {
                    joint_report(
                        &prepared[i],
                        &prepared[j],
                        estimator,
                        *permutations,
                        seed.derive(cell as u64),
                    )
                    .map(|r| (r.rho, r.p_value))
                    .map_err(|e| e.context(format!("{} vs {}", datasets[i].0, datasets[j].0)))
                })
                .collect::<Result<Vec<_>>>()?
        }
        MatrixMethod::Baseline { method } => pairs
            .par_iter()
            .map(|&(i, j)| {
                method
                    .compute(&datasets[i].1, &datasets[j].1)
                    .map(|r| (r.value, None))
                    .map_err(|e| e.context(format!("{} vs {}", datasets[i].0, datasets[j].0)))
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let mut rho = vec![vec![1.0; n]; n];
    let with_p = matches!(method, MatrixMethod::Idcor { permutations, .. } if *permutations > 0);
    let mut p = with_p.then(|| vec![vec![None; n]; n]);
    for (&(i, j), &(r, pv)) in pairs.iter().zip(&cells) {
        rho[i][j] = r;
        rho[j][i] = r;
        if let Some(p) = p.as_mut() {
            p[i][j] = pv;
            p[j][i] = pv;
        }
    }
    Ok(CorrelationMatrix {
        labels: datasets.iter().map(|(l, _)| l.clone()).collect(),
        rho,
        p,
        method: method.name(),
    })
}
