//! Probabilistic wind power forecasts as quantile sets.
//!
//! One gradient-boosted tree ensemble per quantile level, trained on the
//! pinball loss `max{(1-alpha)(q-y), alpha(y-q)}`: trees fit the loss
//! gradient with squared-error splits on histogram-binned features, and each
//! terminal leaf is re-estimated as the alpha-quantile of its in-bag
//! residuals. Predictions are clipped to `[0, e_max]` and made monotone
//! across levels by rearrangement (sorting).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::quantile_sorted;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("need at least {need} training rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("feature matrix is empty or ragged")]
    BadFeatures,
    #[error("target value {0} outside [0, e_max]")]
    TargetRange(f64),
    #[error("quantile levels must lie strictly inside (0, 1) and be sorted")]
    BadLevels,
    #[error("feature dimension mismatch: model has {model}, input has {input}")]
    DimensionMismatch { model: usize, input: usize },
}

/// Pinball (quantile) loss.
pub fn pinball_loss<T: Scalar>(predicted: T, observed: T, alpha: T) -> T {
    let a = (T::one() - alpha) * (predicted - observed);
    let b = alpha * (observed - predicted);
    a.max(b)
}

/// A set of predictive quantiles for one period, monotone in the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileForecast<T> {
    pub levels: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> QuantileForecast<T> {
    /// Quantile at an arbitrary level: linear interpolation between grid
    /// levels, clamped to the end values outside the grid.
    pub fn quantile(&self, alpha: T) -> T {
        let levels = &self.levels;
        let values = &self.values;
        if alpha <= levels[0] {
            return values[0];
        }
        if alpha >= *levels.last().unwrap() {
            return *values.last().unwrap();
        }
        let mut hi = 1;
        while levels[hi] < alpha {
            hi += 1;
        }
        let lo = hi - 1;
        let w = (alpha - levels[lo]) / (levels[hi] - levels[lo]);
        values[lo] + w * (values[hi] - values[lo])
    }

    pub fn median(&self) -> T {
        self.quantile(T::from_f64_lossy(0.5))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbmParams<T> {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: T,
    pub subsample: f64,
    pub min_leaf: usize,
    pub n_bins: usize,
}

impl<T: Scalar> Default for GbmParams<T> {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: 3,
            learning_rate: T::from_f64_lossy(0.05),
            subsample: 0.5,
            min_leaf: 10,
            n_bins: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node<T> {
    Split { feature: usize, bin: u16, left: usize, right: usize },
    Leaf { value: T },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tree<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    fn leaf_of(&self, binned_row: &[u16]) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Split { feature, bin, left, right } => {
                    idx = if binned_row[*feature] <= *bin { *left } else { *right };
                }
                Node::Leaf { .. } => return idx,
            }
        }
    }

    fn predict(&self, binned_row: &[u16]) -> T {
        match &self.nodes[self.leaf_of(binned_row)] {
            Node::Leaf { value } => *value,
            Node::Split { .. } => unreachable!("leaf_of returns a leaf"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Ensemble<T> {
    base: T,
    trees: Vec<Tree<T>>,
}

/// Boosted quantile ensembles for the standard level grid, one per level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedQuantileModel<T> {
    pub levels: Vec<T>,
    pub feature_names: Vec<String>,
    pub params: GbmParams<T>,
    pub e_max: T,
    pub seed: u64,
    /// Set when the training target was constant; the model collapses to
    /// that constant at every level.
    pub constant_flagged: bool,
    ensembles: Vec<Ensemble<T>>,
    /// Per-feature ascending split thresholds for binning raw inputs.
    bin_edges: Vec<Vec<T>>,
}

fn bin_value<T: Scalar>(edges: &[T], x: T) -> u16 {
    // number of edges strictly below x
    let mut lo = 0usize;
    let mut hi = edges.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        if edges[mid] < x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo as u16
}

impl<T: Scalar> BoostedQuantileModel<T> {
    /// Fits one ensemble per level. Deterministic for a fixed seed;
    /// ensembles train in parallel with independent per-level streams.
    pub fn fit(
        feature_names: &[&str],
        features: &[Vec<T>],
        targets: &[T],
        e_max: T,
        levels: &[T],
        params: GbmParams<T>,
        seed: u64,
    ) -> Result<Self, PowerError> {
        let n = targets.len();
        if n < 200 {
            return Err(PowerError::TooFewRows { need: 200, got: n });
        }
        let dim = feature_names.len();
        if dim == 0 || features.len() != n || features.iter().any(|r| r.len() != dim) {
            return Err(PowerError::BadFeatures);
        }
        for &y in targets {
            if y < T::zero() || y > e_max {
                return Err(PowerError::TargetRange(y.to_f64().unwrap_or(f64::NAN)));
            }
        }
        if levels.is_empty()
            || levels.iter().any(|&a| a <= T::zero() || a >= T::one())
            || levels.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(PowerError::BadLevels);
        }

        let constant = targets.iter().all(|&y| y == targets[0]);
        let mut sorted_targets = targets.to_vec();
        sorted_targets.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // histogram bin edges from feature quantiles
        let bin_edges: Vec<Vec<T>> = (0..dim)
            .map(|j| {
                let mut col: Vec<T> = features.iter().map(|r| r[j]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut edges = Vec::new();
                for b in 1..params.n_bins {
                    let q = T::from_usize_lossy(b) / T::from_usize_lossy(params.n_bins);
                    let e = quantile_sorted(&col, q);
                    if edges.last().map_or(true, |&last| e > last) {
                        edges.push(e);
                    }
                }
                edges
            })
            .collect();
        let binned: Vec<u16> = features
            .iter()
            .flat_map(|row| row.iter().enumerate().map(|(j, &x)| bin_value(&bin_edges[j], x)))
            .collect();

        let ensembles: Vec<Ensemble<T>> = levels
            .par_iter()
            .enumerate()
            .map(|(li, &alpha)| {
                let base = quantile_sorted(&sorted_targets, alpha);
                if constant {
                    return Ensemble { base, trees: Vec::new() };
                }
                let mut rng = ChaCha20Rng::seed_from_u64(
                    seed.wrapping_add((li as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                );
                let mut predictions = vec![base; n];
                let mut trees = Vec::with_capacity(params.n_trees);
                for _ in 0..params.n_trees {
                    let in_bag: Vec<u32> = (0..n as u32)
                        .filter(|_| params.subsample >= 1.0 || rng.gen_bool(params.subsample))
                        .collect();
                    if (in_bag.len() as usize) < 2 * params.min_leaf {
                        continue;
                    }
                    let gradients: Vec<T> = in_bag
                        .iter()
                        .map(|&i| {
                            let i = i as usize;
                            if targets[i] <= predictions[i] {
                                alpha - T::one()
                            } else {
                                alpha
                            }
                        })
                        .collect();
                    let mut tree = grow_tree(&binned, dim, &in_bag, &gradients, &params);
                    // leaf values: alpha-quantile of in-bag residuals per leaf
                    refit_leaves(&mut tree, &binned, dim, &in_bag, targets, &predictions, alpha);
                    for i in 0..n {
                        let row = &binned[i * dim..(i + 1) * dim];
                        predictions[i] += params.learning_rate * tree.predict(row);
                    }
                    // scale leaves by the learning rate so prediction is a plain sum
                    for node in tree.nodes.iter_mut() {
                        if let Node::Leaf { value } = node {
                            *value = *value * params.learning_rate;
                        }
                    }
                    trees.push(tree);
                }
                Ensemble { base, trees }
            })
            .collect();

        Ok(Self {
            levels: levels.to_vec(),
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            params,
            e_max,
            seed,
            constant_flagged: constant,
            ensembles,
            bin_edges,
        })
    }

    /// Predictive quantiles for one feature vector: clipped to `[0, e_max]`
    /// and rearranged to be monotone in the level.
    pub fn predict_quantiles(&self, features: &[T]) -> Result<QuantileForecast<T>, PowerError> {
        if features.len() != self.feature_names.len() {
            return Err(PowerError::DimensionMismatch {
                model: self.feature_names.len(),
                input: features.len(),
            });
        }
        let binned: Vec<u16> = features
            .iter()
            .enumerate()
            .map(|(j, &x)| bin_value(&self.bin_edges[j], x))
            .collect();
        let mut values: Vec<T> = self
            .ensembles
            .iter()
            .map(|ens| {
                let raw = ens.base
                    + ens
                        .trees
                        .iter()
                        .map(|t| t.predict(&binned))
                        .fold(T::zero(), |a, b| a + b);
                raw.max(T::zero()).min(self.e_max)
            })
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(QuantileForecast { levels: self.levels.clone(), values })
    }

    /// Mean training pinball loss of the current ensemble prefix lengths;
    /// used to check that boosting monotonically improves the fit.
    pub fn training_curve(
        &self,
        features: &[Vec<T>],
        targets: &[T],
        level_index: usize,
    ) -> Vec<T> {
        let dim = self.feature_names.len();
        let alpha = self.levels[level_index];
        let ens = &self.ensembles[level_index];
        let n = targets.len();
        let binned: Vec<u16> = features
            .iter()
            .flat_map(|row| row.iter().enumerate().map(|(j, &x)| bin_value(&self.bin_edges[j], x)))
            .collect();
        let mut predictions = vec![ens.base; n];
        let mut curve = Vec::with_capacity(ens.trees.len() + 1);
        let loss = |preds: &[T]| {
            preds
                .iter()
                .zip(targets)
                .map(|(&p, &y)| pinball_loss(p, y, alpha))
                .sum::<T>()
                / T::from_usize_lossy(n)
        };
        curve.push(loss(&predictions));
        for tree in &ens.trees {
            for i in 0..n {
                predictions[i] += tree.predict(&binned[i * dim..(i + 1) * dim]);
            }
            curve.push(loss(&predictions));
        }
        curve
    }
}

struct SplitCandidate<T> {
    feature: usize,
    bin: u16,
    gain: T,
}

fn grow_tree<T: Scalar>(
    binned: &[u16],
    dim: usize,
    rows: &[u32],
    gradients: &[T],
    params: &GbmParams<T>,
) -> Tree<T> {
    let mut tree = Tree { nodes: Vec::new() };
    // rows and gradients are parallel; recursion partitions both
    let rows_grads: Vec<(u32, T)> = rows.iter().copied().zip(gradients.iter().copied()).collect();
    build_node(&mut tree, binned, dim, rows_grads, 0, params);
    tree
}

fn build_node<T: Scalar>(
    tree: &mut Tree<T>,
    binned: &[u16],
    dim: usize,
    rows: Vec<(u32, T)>,
    depth: usize,
    params: &GbmParams<T>,
) -> usize {
    let n = rows.len();
    let sum: T = rows.iter().map(|&(_, g)| g).sum();
    let mean = sum / T::from_usize_lossy(n);
    if depth >= params.max_depth || n < 2 * params.min_leaf {
        tree.nodes.push(Node::Leaf { value: mean });
        return tree.nodes.len() - 1;
    }

    let mut best: Option<SplitCandidate<T>> = None;
    let max_bin = params.n_bins;
    let mut counts = vec![0usize; max_bin];
    let mut sums = vec![T::zero(); max_bin];
    for feature in 0..dim {
        counts.iter_mut().for_each(|c| *c = 0);
        sums.iter_mut().for_each(|s| *s = T::zero());
        for &(r, g) in &rows {
            let b = binned[r as usize * dim + feature] as usize;
            counts[b] += 1;
            sums[b] += g;
        }
        let mut left_n = 0usize;
        let mut left_sum = T::zero();
        for bin in 0..max_bin - 1 {
            left_n += counts[bin];
            left_sum += sums[bin];
            let right_n = n - left_n;
            if left_n < params.min_leaf || right_n < params.min_leaf {
                continue;
            }
            let right_sum = sum - left_sum;
            let gain = left_sum * left_sum / T::from_usize_lossy(left_n)
                + right_sum * right_sum / T::from_usize_lossy(right_n)
                - sum * sum / T::from_usize_lossy(n);
            if gain > T::zero() && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(SplitCandidate { feature, bin: bin as u16, gain });
            }
        }
    }

    let Some(split) = best else {
        tree.nodes.push(Node::Leaf { value: mean });
        return tree.nodes.len() - 1;
    };

    let (left_rows, right_rows): (Vec<_>, Vec<_>) = rows
        .into_iter()
        .partition(|&(r, _)| binned[r as usize * dim + split.feature] <= split.bin);
    let idx = tree.nodes.len();
    tree.nodes.push(Node::Split { feature: split.feature, bin: split.bin, left: 0, right: 0 });
    let left = build_node(tree, binned, dim, left_rows, depth + 1, params);
    let right = build_node(tree, binned, dim, right_rows, depth + 1, params);
    if let Node::Split { left: l, right: r, .. } = &mut tree.nodes[idx] {
        *l = left;
        *r = right;
    }
    idx
}

/// Replaces each leaf's value with the alpha-quantile of the in-bag
/// residuals `y - F` routed to it (the line-search step for pinball loss).
fn refit_leaves<T: Scalar>(
    tree: &mut Tree<T>,
    binned: &[u16],
    dim: usize,
    in_bag: &[u32],
    targets: &[T],
    predictions: &[T],
    alpha: T,
) {
    let mut leaf_residuals: std::collections::HashMap<usize, Vec<T>> =
        std::collections::HashMap::new();
    for &r in in_bag {
        let i = r as usize;
        let leaf = tree.leaf_of(&binned[i * dim..(i + 1) * dim]);
        leaf_residuals.entry(leaf).or_default().push(targets[i] - predictions[i]);
    }
    for (leaf, mut residuals) in leaf_residuals {
        residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let value = quantile_sorted(&residuals, alpha);
        if let Node::Leaf { value: v } = &mut tree.nodes[leaf] {
            *v = value;
        }
    }
}
