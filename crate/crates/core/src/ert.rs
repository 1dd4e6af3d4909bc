//! Weighted extremely randomized trees for regression.
//!
//! Trees are grown on the whole sample. At every node `K` features are
//! drawn without replacement among those that are not constant in the node,
//! each gets one threshold drawn uniformly between the node minimum and
//! maximum, and the candidate with the largest weighted variance reduction
//! wins. Leaves hold weighted target means.
//!
//! A node is split only while its weight reaches `min_samples_split` in units
//! of the mean weight per distinct observation. With unit weights this is the
//! usual sample count; a duplicated row and a row of doubled weight are the
//! same thing; near-zero weights do not buy a leaf of their own.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{SeedStream, StreamRng};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErtParams {
    pub n_estimators: usize,
    pub min_samples_split: usize,
    /// Candidate features per node; `None` uses every feature.
    pub n_candidate_splits: Option<usize>,
    pub seed: u64,
}

impl Default for ErtParams {
    fn default() -> Self {
        Self { n_estimators: 50, min_samples_split: 2, n_candidate_splits: None, seed: 0 }
    }
}

impl ErtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be positive"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be at least 2"));
        }
        if self.n_candidate_splits == Some(0) {
            return Err(Error::InvalidParameter("n_candidate_splits must be positive"));
        }
        Ok(())
    }
}

/// Dense row-major matrix of input features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new() }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self { cols, data: Vec::with_capacity(cols * rows) }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::with_capacity(cols, rows.len());
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Split on `x[feature] < value`, children at `left` and `left + 1`; or a
/// leaf (`feature == LEAF`) predicting `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct Node {
    value: f64,
    feature: u32,
    left: u32,
}

const LEAF: u32 = u32::MAX;

impl Node {
    fn leaf(value: f64) -> Self {
        Self { value, feature: LEAF, left: 0 }
    }

    fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }
}

/// One regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self.nodes[0];
        while !node.is_leaf() {
            let right = usize::from(x[node.feature as usize] >= node.value);
            node = self.nodes[node.left as usize + right];
        }
        node.value
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Maps every leaf value through `f`.
    pub fn map_leaves<F: Fn(f64) -> f64>(&mut self, f: F) {
        for n in self.nodes.iter_mut().filter(|n| n.is_leaf()) {
            n.value = f(n.value);
        }
    }
}

/// Fitted ensemble.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErtModel {
    trees: Vec<Tree>,
    n_features: usize,
    y_min: f64,
    y_max: f64,
}

impl ErtModel {
    pub fn fit(x: &FeatureMatrix, y: &[f64], w: &[f64], params: &ErtParams) -> Result<Self> {
        params.validate()?;
        let n = x.rows();
        if n == 0 || x.cols() == 0 {
            return Err(Error::EmptyInput);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.len() });
        }
        if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative, targets finite"));
        }
        let active: Vec<u32> = (0..n as u32).filter(|&i| w[i as usize] > 0.0).collect();
        if active.is_empty() {
            return Err(Error::ZeroWeights);
        }
        let (y_min, y_max) = active
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(y[i as usize]), hi.max(y[i as usize])));

        let mut cols = Vec::with_capacity(n * x.cols());
        for f in 0..x.cols() {
            cols.extend((0..n).map(|i| x.get(i, f)));
        }
        let builder = Builder {
            cols,
            n,
            n_features: x.cols(),
            y,
            w,
            wy: w.iter().zip(y).map(|(w, y)| w * y).collect(),
            k: params.n_candidate_splits.unwrap_or(x.cols()).min(x.cols()),
            min_split_weight: 0.0,
        };
        let total: f64 = active.iter().map(|&i| w[i as usize]).sum();
        let distinct = distinct_rows(x, y, &active);
        let builder = Builder { min_split_weight: params.min_samples_split as f64 * total / distinct as f64, ..builder };
        let stream = SeedStream::new(params.seed);
        let trees = (0..params.n_estimators)
            .map(|t| {
                let mut idx = active.clone();
                builder.grow(&mut idx, &mut stream.rng("ert-tree", t as u64))
            })
            .collect();
        Ok(Self { trees, n_features: x.cols(), y_min, y_max })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Range of the training targets.
    pub fn target_range(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }

    /// Mean of the per-tree predictions.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_features);
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        (sum / self.trees.len() as f64).clamp(self.y_min, self.y_max)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, found: x.cols() });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}

/// Number of distinct `(x, y)` rows among `idx`.
fn distinct_rows(x: &FeatureMatrix, y: &[f64], idx: &[u32]) -> usize {
    let key = |i: u32| {
        let mut k: Vec<u64> = x.row(i as usize).iter().map(|v| v.to_bits()).collect();
        k.push(y[i as usize].to_bits());
        k
    };
    let mut keys: Vec<Vec<u64>> = idx.iter().map(|&i| key(i)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

struct Builder<'a> {
    /// Column-major copy of the features: `cols[f * n + i]`.
    cols: Vec<f64>,
    n: usize,
    n_features: usize,
    y: &'a [f64],
    w: &'a [f64],
    /// `w[i] * y[i]`.
    wy: Vec<f64>,
    k: usize,
    /// Smallest node weight that may still be split.
    min_split_weight: f64,
}

struct Pending {
    node: usize,
    start: usize,
    end: usize,
}

impl Builder<'_> {
    fn column(&self, f: usize) -> &[f64] {
        &self.cols[f * self.n..(f + 1) * self.n]
    }

    /// Depth-first, left child first, with an explicit stack.
    fn grow(&self, idx: &mut [u32], rng: &mut StreamRng) -> Tree {
        let mut nodes = vec![Node::leaf(0.0)];
        let mut stack = vec![Pending { node: 0, start: 0, end: idx.len() }];
        let mut features = Vec::with_capacity(self.n_features);
        let mut bounds = vec![(0.0, 0.0); self.n_features];
        while let Some(p) = stack.pop() {
            let part = &mut idx[p.start..p.end];
            let (value, weight, constant_y) = self.leaf_value(part);
            nodes[p.node] = Node::leaf(value);
            if part.len() < 2 || weight < self.min_split_weight || constant_y {
                continue;
            }
            features.clear();
            for (f, bound) in bounds.iter_mut().enumerate() {
                let col = self.column(f);
                let (lo, hi) = part.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = col[i as usize];
                    (lo.min(v), hi.max(v))
                });
                *bound = (lo, hi);
                if lo < hi {
                    features.push(f);
                }
            }
            if features.is_empty() {
                continue;
            }
            let Some((feature, threshold)) = self.best_split(part, &mut features, &bounds, rng) else {
                continue;
            };
            let col = self.column(feature);
            let mid = partition(part, |i| col[i as usize] < threshold);
            let left = nodes.len();
            nodes.push(Node::leaf(0.0));
            nodes.push(Node::leaf(0.0));
            nodes[p.node] = Node { value: threshold, feature: feature as u32, left: left as u32 };
            stack.push(Pending { node: left + 1, start: p.start + mid, end: p.end });
            stack.push(Pending { node: left, start: p.start, end: p.start + mid });
        }
        Tree { nodes }
    }

    /// Weighted mean clamped to the node's target range, total weight, and
    /// whether the targets are constant.
    fn leaf_value(&self, part: &[u32]) -> (f64, f64, bool) {
        let (mut s, mut ws) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in part {
            let (y, w) = (self.y[i as usize], self.w[i as usize]);
            s += w * y;
            ws += w;
            lo = lo.min(y);
            hi = hi.max(y);
        }
        ((s / ws).clamp(lo, hi), ws, lo == hi)
    }

    fn best_split(
        &self,
        part: &[u32],
        features: &mut [usize],
        bounds: &[(f64, f64)],
        rng: &mut StreamRng,
    ) -> Option<(usize, f64)> {
        let m = features.len();
        let k = self.k.min(m);
        let mut best: Option<(usize, f64, f64)> = None;
        for c in 0..k {
            let j = rng.random_range(c..m);
            features.swap(c, j);
            let f = features[c];
            let (lo, hi) = bounds[f];
            let u: f64 = rng.random();
            let t = lo + u * (hi - lo);
            if t <= lo || t > hi {
                continue;
            }
            if let Some(score) = self.score(part, f, t) {
                if best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((f, t, score));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    /// `S_L^2/W_L + S_R^2/W_R - S^2/W`, or `None` when a side is empty.
    fn score(&self, part: &[u32], f: usize, t: f64) -> Option<f64> {
        let col = self.column(f);
        let (mut sl, mut wl, mut sr, mut wr) = (0.0, 0.0, 0.0, 0.0);
        // Branch-free: adding an exact zero leaves a sum unchanged.
        for &i in part {
            let i = i as usize;
            let (wy, w) = (self.wy[i], self.w[i]);
            let left = f64::from(u8::from(col[i] < t));
            let right = 1.0 - left;
            sl += wy * left;
            wl += w * left;
            sr += wy * right;
            wr += w * right;
        }
        if wl <= 0.0 || wr <= 0.0 {
            return None;
        }
        let (s, w) = (sl + sr, wl + wr);
        Some(sl * sl / wl + sr * sr / wr - s * s / w)
    }
}

/// In-place partition; returns the number of indices sent left.
fn partition<F: Fn(u32) -> bool>(part: &mut [u32], goes_left: F) -> usize {
    let mut mid = 0;
    for i in 0..part.len() {
        let v = part[i];
        part.swap(i, mid);
        mid += usize::from(goes_left(v));
    }
    mid
}
