//! Exact Euclidean k-nearest-neighbor search.
//!
//! Two backends return identical tables: a brute-force scan (the reference)
//! and a kd-tree used for low ambient dimension. Both order candidates by
//! `(squared distance, row index)`, so equidistant neighbors resolve to the
//! lower row index. The kd-tree only prunes on a single split-plane offset,
//! which is never larger than the computed distance in floating point, so
//! pruning cannot change the result.

use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Column count up to which [`KnnBackend::Auto`] picks the kd-tree.
pub const KDTREE_MAX_COLS: usize = 16;
const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnBackend {
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

/// Sorted neighbor distances for every retained point.
///
/// Distances are stored squared; [`NeighborTable::distances`] takes roots.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    n_rows: usize,
    retained: Vec<usize>,
    sq_dist: Vec<f64>,
    neighbors: Vec<usize>,
    excluded: Vec<usize>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Row indices of points whose nearest neighbor is at distance > 0.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    /// Rows dropped because an identical row exists.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    /// Squared distances of the `pos`-th retained point, ascending.
    pub fn squared(&self, pos: usize) -> &[f64] {
        &self.sq_dist[pos * self.k..(pos + 1) * self.k]
    }

    pub fn neighbors(&self, pos: usize) -> &[usize] {
        &self.neighbors[pos * self.k..(pos + 1) * self.k]
    }

    pub fn distances(&self, pos: usize) -> Vec<f64> {
        self.squared(pos).iter().map(|d| d.sqrt()).collect()
    }

    pub fn iter_squared(&self) -> impl Iterator<Item = &[f64]> {
        self.sq_dist.chunks_exact(self.k)
    }
}

#[inline]
fn block_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Squared Euclidean distance, summed within each column block and then
/// across blocks in order.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64], blocks: &[usize]) -> f64 {
    let mut total = 0.0;
    for w in blocks.windows(2) {
        total += block_sq(&a[w[0]..w[1]], &b[w[0]..w[1]]);
    }
    total
}

/// Bounded sorted candidate list.
struct Best<'a> {
    d: &'a mut [f64],
    idx: &'a mut [usize],
    len: usize,
}

impl<'a> Best<'a> {
    fn new(d: &'a mut [f64], idx: &'a mut [usize]) -> Self {
        Best { d, idx, len: 0 }
    }

    #[inline]
    fn full(&self) -> bool {
        self.len == self.d.len()
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.full() {
            self.d[self.len - 1]
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    fn offer(&mut self, dist: f64, j: usize) {
        let k = self.d.len();
        if self.full() {
            let (wd, wj) = (self.d[k - 1], self.idx[k - 1]);
            if dist > wd || (dist == wd && j > wj) {
                return;
            }
        }
        let mut pos = if self.full() { k - 1 } else { self.len };
        while pos > 0 {
            let (pd, pj) = (self.d[pos - 1], self.idx[pos - 1]);
            if pd < dist || (pd == dist && pj < j) {
                break;
            }
            self.d[pos] = pd;
            self.idx[pos] = pj;
            pos -= 1;
        }
        self.d[pos] = dist;
        self.idx[pos] = j;
        if !self.full() {
            self.len += 1;
        }
    }
}

pub fn knn(x: &DataMatrix, k: usize) -> Result<NeighborTable> {
    knn_with(x, k, KnnBackend::Auto)
}

pub fn knn_with(x: &DataMatrix, k: usize, backend: KnnBackend) -> Result<NeighborTable> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let n = x.n_rows();
    if n < k + 1 {
        return Err(Error::TooFewPoints {
            needed: k + 1,
            available: n,
        });
    }
    let mut sq = vec![0.0; n * k];
    let mut nb = vec![0usize; n * k];
    let use_tree = match backend {
        KnnBackend::Auto => x.n_cols() <= KDTREE_MAX_COLS,
        KnnBackend::BruteForce => false,
        KnnBackend::KdTree => true,
    };
    if use_tree {
        let tree = KdTree::build(x);
        sq.par_chunks_mut(k)
            .zip(nb.par_chunks_mut(k))
            .enumerate()
            .for_each(|(i, (d, idx))| {
                let mut best = Best::new(d, idx);
                tree.search(x, i, &mut best);
            });
    } else {
        let blocks = x.blocks();
        sq.par_chunks_mut(k)
            .zip(nb.par_chunks_mut(k))
            .enumerate()
            .for_each(|(i, (d, idx))| {
                let q = x.row(i);
                let mut best = Best::new(d, idx);
                for (j, p) in x.rows().enumerate() {
                    if j == i {
                        continue;
                    }
                    let dist = squared_distance(q, p, blocks);
                    if dist <= best.worst() {
                        best.offer(dist, j);
                    }
                }
            });
    }

    let mut retained = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for i in 0..n {
        if sq[i * k] > 0.0 {
            retained.push(i);
        } else {
            excluded.push(i);
        }
    }
    if !excluded.is_empty() {
        let keep = |v: &[f64]| -> Vec<f64> {
            retained
                .iter()
                .flat_map(|&i| v[i * k..(i + 1) * k].iter().copied())
                .collect()
        };
        let sq_kept = keep(&sq);
        nb = retained
            .iter()
            .flat_map(|&i| nb[i * k..(i + 1) * k].iter().copied())
            .collect();
        sq = sq_kept;
    }
    Ok(NeighborTable {
        k,
        n_rows: n,
        retained,
        sq_dist: sq,
        neighbors: nb,
        excluded,
    })
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

struct KdTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
    root: usize,
}

impl KdTree {
    fn build(x: &DataMatrix) -> Self {
        let mut tree = KdTree {
            nodes: Vec::new(),
            order: (0..x.n_rows()).collect(),
            root: 0,
        };
        tree.root = tree.build_range(x, 0, x.n_rows());
        tree
    }

    fn build_range(&mut self, x: &DataMatrix, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let d = x.n_cols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (j, &v) in x.row(i).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let mut axis = 0;
        for j in 1..d {
            if hi[j] - lo[j] > hi[axis] - lo[axis] {
                axis = j;
            }
        }
        if hi[axis] - lo[axis] <= 0.0 {
            // All points in this range coincide.
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            x.get(a, axis).total_cmp(&x.get(b, axis)).then(a.cmp(&b))
        });
        let value = x.get(self.order[mid], axis);
        let left = self.build_range(x, start, mid);
        let right = self.build_range(x, mid, end);
        self.nodes.push(Node::Split {
            axis,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    fn search(&self, x: &DataMatrix, query: usize, best: &mut Best<'_>) {
        self.visit(self.root, x, query, x.row(query), best);
    }

    fn visit(&self, node: usize, x: &DataMatrix, query: usize, q: &[f64], best: &mut Best<'_>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let blocks = x.blocks();
                for &j in &self.order[start..end] {
                    if j == query {
                        continue;
                    }
                    let dist = squared_distance(q, x.row(j), blocks);
                    if dist <= best.worst() {
                        best.offer(dist, j);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let (near, far, gap) = if q[axis] < value {
                    (left, right, value - q[axis])
                } else {
                    (right, left, q[axis] - value)
                };
                self.visit(near, x, query, q, best);
                if gap * gap <= best.worst() {
                    self.visit(far, x, query, q, best);
                }
            }
        }
    }
}
