//! The dataset carrier and the row/column operations every other module
//! builds on.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// `n_rows` samples by `n_cols` features, row-major, all entries finite.
///
/// A matrix produced by [`concat_features`] remembers where each input's
/// columns start. Distances are accumulated per block and then summed
/// across blocks, which makes `X ⊕ Y` and `Y ⊕ X` (and `X ⊕ X` versus `X`)
/// produce bit-identical neighbor geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    labels: Option<Vec<i64>>,
    blocks: Vec<usize>,
}

impl DataMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows < 2 {
            return Err(Error::Shape(format!("need at least 2 rows, got {n_rows}")));
        }
        if n_cols == 0 {
            return Err(Error::Shape("need at least 1 column".into()));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::Shape(format!(
                "{} values do not fill {n_rows}x{n_cols}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_cols,
                col: pos % n_cols,
            });
        }
        Ok(DataMatrix {
            n_rows,
            n_cols,
            values,
            labels: None,
            blocks: vec![0, n_cols],
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::Shape(format!(
                "row {bad} has {} columns, expected {n_cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n_cols = cols.len();
        let n_rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n_rows) {
            return Err(Error::Shape("columns have different lengths".into()));
        }
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            values.extend(cols.iter().map(|c| c[i]));
        }
        Self::new(n_rows, n_cols, values)
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n_rows
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    /// Column boundaries of the concatenated parts, starting at 0 and ending
    /// at `n_cols`.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Columns `range` as a fresh single-block matrix. Labels are kept.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n_cols {
            return Err(Error::Shape(format!(
                "column range {range:?} outside 0..{}",
                self.n_cols
            )));
        }
        let mut values = Vec::with_capacity(self.n_rows * range.len());
        for r in self.rows() {
            values.extend_from_slice(&r[range.clone()]);
        }
        let mut out = Self::new(self.n_rows, range.len(), values)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Rows picked by `indices` (in that order), labels following.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_rows) {
            return Err(Error::Shape(format!("row {bad} out of range")));
        }
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(indices.len(), self.n_cols, values)?;
        out.blocks = self.blocks.clone();
        out.labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Ok(out)
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map_values(|v| v * c)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::new(
            self.n_rows,
            self.n_cols,
            self.values.iter().map(|&v| f(v)).collect(),
        )?;
        out.labels = self.labels.clone();
        out.blocks = self.blocks.clone();
        Ok(out)
    }

    /// Appends zero columns up to `width`.
    pub fn zero_padded(&self, width: usize) -> Result<Self> {
        if width < self.n_cols {
            return Err(Error::Shape(format!(
                "cannot pad {} columns down to {width}",
                self.n_cols
            )));
        }
        let mut values = Vec::with_capacity(self.n_rows * width);
        for r in self.rows() {
            values.extend_from_slice(r);
            values.extend(std::iter::repeat_n(0.0, width - self.n_cols));
        }
        let mut out = Self::new(self.n_rows, width, values)?;
        out.labels = self.labels.clone();
        Ok(out)
    }
}

/// Per-column centering to mean 0 and scaling to population standard
/// deviation 1. Zero-variance columns become identically 0.
pub fn standardize(x: &DataMatrix) -> Result<DataMatrix> {
    let n = x.n_rows as f64;
    let d = x.n_cols;
    let mut mean = vec![0.0; d];
    for r in x.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in x.rows() {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();

    let mut values = Vec::with_capacity(x.values.len());
    for r in x.rows() {
        for j in 0..d {
            values.push(if std[j] > 0.0 {
                (r[j] - mean[j]) / std[j]
            } else {
                0.0
            });
        }
    }
    let mut out = DataMatrix::new(x.n_rows, d, values)?;
    out.labels = x.labels.clone();
    out.blocks = x.blocks.clone();
    Ok(out)
}

/// Feature-wise concatenation `X ⊕ Y`: row i is `(X_i, Y_i)`.
///
/// Labels are taken from `x` when present, else from `y`.
pub fn concat_features(x: &DataMatrix, y: &DataMatrix) -> Result<DataMatrix> {
    if x.n_rows != y.n_rows {
        return Err(Error::RowMismatch {
            left: "X".into(),
            left_rows: x.n_rows,
            right: "Y".into(),
            right_rows: y.n_rows,
        });
    }
    let d = x.n_cols + y.n_cols;
    let mut values = Vec::with_capacity(x.n_rows * d);
    for (a, b) in x.rows().zip(y.rows()) {
        values.extend_from_slice(a);
        values.extend_from_slice(b);
    }
    let mut out = DataMatrix::new(x.n_rows, d, values)?;
    out.labels = x.labels.clone().or_else(|| y.labels.clone());
    out.blocks = x
        .blocks
        .iter()
        .copied()
        .chain(y.blocks[1..].iter().map(|b| b + x.n_cols))
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleMode {
    Full,
    ClassPreserving,
}

/// Row permutation for [`shuffle_rows`]: output row `i` is input row `perm[i]`.
pub fn shuffle_permutation(
    n_rows: usize,
    labels: Option<&[i64]>,
    mode: ShuffleMode,
    seed: RngSeed,
) -> Result<Vec<usize>> {
    let mut rng = seed.rng();
    let mut perm: Vec<usize> = (0..n_rows).collect();
    match mode {
        ShuffleMode::Full => perm.shuffle(&mut rng),
        ShuffleMode::ClassPreserving => {
            let labels = labels.ok_or_else(|| {
                Error::InvalidParameter("class-preserving shuffle needs row labels".into())
            })?;
            // Groups are visited in ascending label order so the draw sequence
            // does not depend on hash ordering.
            let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
            for (i, &l) in labels.iter().enumerate() {
                groups.entry(l).or_default().push(i);
            }
            for slots in groups.values() {
                let mut members = slots.clone();
                members.shuffle(&mut rng);
                for (&slot, &src) in slots.iter().zip(&members) {
                    perm[slot] = src;
                }
            }
        }
    }
    Ok(perm)
}

/// Randomly re-pairs the rows of `y`. Labels travel with their rows.
pub fn shuffle_rows(y: &DataMatrix, mode: ShuffleMode, seed: RngSeed) -> Result<DataMatrix> {
    let perm = shuffle_permutation(y.n_rows, y.labels(), mode, seed)?;
    y.select_rows(&perm)
}

/// Deterministic subsample of `n` distinct rows, kept in original order.
pub fn sample_row_indices(n_rows: usize, n: usize, seed: RngSeed) -> Result<Vec<usize>> {
    if n > n_rows || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "cannot sample {n} of {n_rows} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n_rows).collect();
    idx.shuffle(&mut seed.rng());
    idx.truncate(n);
    idx.sort_unstable();
    Ok(idx)
}

/// Random fully connected LeakyReLU network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layers: usize,
    pub width: usize,
    pub slope: f64,
    pub weight_seed: RngSeed,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            layers: 15,
            width: 784,
            slope: 0.01,
            weight_seed: RngSeed(0),
        }
    }
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.width == 0 {
            return Err(Error::InvalidParameter(
                "mlp needs at least one layer of width >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.slope) {
            return Err(Error::InvalidParameter(format!(
                "slope {} outside [0, 1]",
                self.slope
            )));
        }
        Ok(())
    }

    /// Weight matrices, row-major `width x width`, N(0, 1/width) entries.
    pub fn weights(&self) -> Vec<Vec<f64>> {
        let normal = Normal::new(0.0, 1.0 / (self.width as f64).sqrt()).unwrap();
        (0..self.layers)
            .map(|l| {
                let mut rng = self.weight_seed.derive(l as u64).rng();
                (0..self.width * self.width)
                    .map(|_| normal.sample(&mut rng))
                    .collect()
            })
            .collect()
    }
}

pub fn leaky_relu(v: f64, slope: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        slope * v
    }
}

/// Pushes every row through `layers` rounds of `h <- leaky_relu(h W)`.
pub fn mlp_transform(x: &DataMatrix, spec: &MlpSpec) -> Result<DataMatrix> {
    spec.validate()?;
    if x.n_cols != spec.width {
        return Err(Error::Shape(format!(
            "input has {} columns, network width is {}",
            x.n_cols, spec.width
        )));
    }
    let w = spec.width;
    let weights = spec.weights();
    let mut h = x.values.clone();
    let mut next = vec![0.0; w];
    for layer in &weights {
        for row in h.chunks_exact_mut(w) {
            next.iter_mut().for_each(|v| *v = 0.0);
            for (a, wrow) in row.iter().zip(layer.chunks_exact(w)) {
                if *a == 0.0 {
                    continue;
                }
                for (o, wv) in next.iter_mut().zip(wrow) {
                    *o += a * wv;
                }
            }
            for (r, o) in row.iter_mut().zip(&next) {
                *r = leaky_relu(*o, spec.slope);
            }
        }
    }
    let mut out = DataMatrix::new(x.n_rows, w, h)?;
    out.labels = x.labels.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn col(v: &[f64]) -> DataMatrix {
        DataMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_with_position() {
        let err = DataMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 4.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        assert!(DataMatrix::new(1, 2, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn standardize_uses_population_std() {
        let s = standardize(&col(&[1.0, 2.0, 3.0])).unwrap();
        let expect = 1.0 / (2.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(s.get(0, 0), -expect, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(1, 0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(2, 0), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 1.2247, epsilon = 1e-4);
    }

    #[test]
    fn standardize_zero_variance_column() {
        let s = standardize(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_idempotent() {
        let x = DataMatrix::from_rows(&[
            vec![1.0, 10.0],
            vec![4.0, -2.0],
            vec![2.5, 7.0],
            vec![-3.0, 0.5],
        ])
        .unwrap();
        let once = standardize(&x).unwrap();
        let twice = standardize(&once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn concat_shapes_and_blocks() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let y = col(&[7.0, 8.0, 9.0]);
        let j = concat_features(&x, &y).unwrap();
        assert_eq!((j.n_rows(), j.n_cols()), (3, 3));
        assert_eq!(j.row(1), &[3.0, 4.0, 8.0]);
        assert_eq!(j.blocks(), &[0, 2, 3]);
        assert_eq!(j.columns(0..2).unwrap().values(), x.values());
        assert_eq!(j.columns(2..3).unwrap().values(), y.values());

        let xx = concat_features(&x, &x).unwrap();
        assert_eq!(xx.n_cols(), 4);
        assert_eq!(xx.row(0), &[1.0, 2.0, 1.0, 2.0]);

        let short = col(&[1.0, 2.0]);
        assert!(matches!(
            concat_features(&x, &short),
            Err(Error::RowMismatch { .. })
        ));
    }

    #[test]
    fn class_shuffle_without_labels_rejected() {
        let y = col(&[1.0, 2.0, 3.0]);
        assert!(shuffle_rows(&y, ShuffleMode::ClassPreserving, RngSeed(1)).is_err());
    }

    #[test]
    fn class_shuffle_singleton_groups_is_identity() {
        let perm = shuffle_permutation(
            5,
            Some(&[4, 3, 2, 1, 0]),
            ShuffleMode::ClassPreserving,
            RngSeed(9),
        )
        .unwrap();
        assert_eq!(perm, vec![0, 1, 2, 3, 4]);
        // n = 1 admits only the identity.
        assert_eq!(
            shuffle_permutation(1, None, ShuffleMode::Full, RngSeed(2)).unwrap(),
            vec![0]
        );
    }

    #[test]
    fn class_shuffle_two_groups_of_two() {
        // Enumerate the 4 within-group permutations of labels [0, 1, 0, 1].
        let allowed = [[0, 1, 2, 3], [2, 1, 0, 3], [0, 3, 2, 1], [2, 3, 0, 1]];
        let labels = [0, 1, 0, 1];
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..64 {
            let p = shuffle_permutation(4, Some(&labels), ShuffleMode::ClassPreserving, RngSeed(s))
                .unwrap();
            assert!(allowed.iter().any(|a| a[..] == p[..]), "{p:?}");
            let again =
                shuffle_permutation(4, Some(&labels), ShuffleMode::ClassPreserving, RngSeed(s))
                    .unwrap();
            assert_eq!(p, again);
            seen.insert(p);
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn shuffled_labels_travel_with_rows() {
        let y = col(&[10.0, 11.0, 12.0, 13.0])
            .with_labels(vec![0, 1, 2, 3])
            .unwrap();
        let s = shuffle_rows(&y, ShuffleMode::Full, RngSeed(5)).unwrap();
        for (v, l) in s.values().iter().zip(s.labels().unwrap()) {
            assert_eq!(*v, 10.0 + *l as f64);
        }
    }

    #[test]
    fn leaky_relu_definition() {
        assert_eq!(leaky_relu(-2.0, 0.5), -1.0);
        assert_eq!(leaky_relu(2.0, 0.5), 2.0);
        assert_eq!(leaky_relu(-3.0, 0.0), 0.0);
    }

    #[test]
    fn mlp_slope_one_single_layer_is_matrix_product() {
        let spec = MlpSpec {
            layers: 1,
            width: 3,
            slope: 1.0,
            weight_seed: RngSeed(11),
        };
        let x = DataMatrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.0, 3.0, -1.0]]).unwrap();
        let out = mlp_transform(&x, &spec).unwrap();
        let w = &spec.weights()[0];
        for i in 0..2 {
            for j in 0..3 {
                let expect: f64 = (0..3).map(|k| x.get(i, k) * w[k * 3 + j]).sum();
                assert_abs_diff_eq!(out.get(i, j), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mlp_relu_kills_negative_preactivations() {
        let spec = MlpSpec {
            layers: 1,
            width: 2,
            slope: 0.0,
            weight_seed: RngSeed(3),
        };
        let w = &spec.weights()[0];
        // Choose a row whose pre-activations are both negative: -(W^-1)^T-ish
        // direction is awkward, so search a small grid instead.
        let mut found = false;
        for a in -4..=4 {
            for b in -4..=4 {
                let (a, b) = (a as f64, b as f64);
                let pre = [a * w[0] + b * w[2], a * w[1] + b * w[3]];
                if pre[0] < 0.0 && pre[1] < 0.0 {
                    let x = DataMatrix::from_rows(&[vec![a, b], vec![1.0, 1.0]]).unwrap();
                    let out = mlp_transform(&x, &spec).unwrap();
                    assert_eq!(out.row(0), &[0.0, 0.0]);
                    found = true;
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn mlp_width_mismatch_rejected() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let spec = MlpSpec {
            width: 3,
            ..MlpSpec::default()
        };
        assert!(mlp_transform(&x, &spec).is_err());
        let bad = MlpSpec {
            width: 2,
            slope: 1.5,
            ..MlpSpec::default()
        };
        assert!(mlp_transform(&x, &bad).is_err());
    }

    #[test]
    fn sampled_rows_are_sorted_and_distinct() {
        let idx = sample_row_indices(100, 30, RngSeed(4)).unwrap();
        assert_eq!(idx.len(), 30);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(idx, sample_row_indices(100, 30, RngSeed(4)).unwrap());
    }
}
