use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ForestParams;
use crate::audio::Label;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Splits must improve impurity by more than this to count as positive;
/// keeps rounding noise from producing zero-gain splits.
pub const MIN_IMPURITY_DECREASE: f64 = 1e-12;

pub fn gini_impurity(counts: [usize; 2]) -> Result<f64> {
    let n = counts[0] + counts[1];
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    Ok(gini(counts))
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    let (a, b) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - (a * a + b * b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

fn class_counts(data: &LabeledDataset, rows: &[usize]) -> [usize; 2] {
    let mut c = [0; 2];
    for &r in rows {
        c[data.labels[r].index()] += 1;
    }
    c
}

/// Best Gini split of `rows` over `features`, trying midpoints between
/// consecutive distinct values. Ties go to the lower feature index, then the
/// lower threshold. `rows` may repeat indices (bootstrap multisets).
pub fn best_split(data: &LabeledDataset, rows: &[usize], features: &[usize]) -> Option<SplitCandidate> {
    best_split_with_min_leaf(data, rows, features, 1)
}

pub(crate) fn best_split_with_min_leaf(
    data: &LabeledDataset,
    rows: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitCandidate> {
    let parent = class_counts(data, rows);
    let n = rows.len();
    if n < 2 || parent[0] == 0 || parent[1] == 0 {
        return None;
    }
    let parent_gini = gini(parent);
    let nf = n as f64;

    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<SplitCandidate> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &feature in &features {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (data.features[r][feature], data.labels[r].index())));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0usize; 2];
        for i in 0..n - 1 {
            left[sorted[i].1] += 1;
            let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let decrease = parent_gini
                - (n_left as f64 / nf) * gini(left)
                - (n_right as f64 / nf) * gini(right);
            // Equal gains reached through different counts can differ in the
            // last bit, so a challenger must win by more than rounding noise.
            if decrease > MIN_IMPURITY_DECREASE
                && best.is_none_or(|b| decrease > b.impurity_decrease + MIN_IMPURITY_DECREASE)
            {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitCandidate { feature, threshold, impurity_decrease: decrease });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub impurity_decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Training samples per class reaching this node, `[normal, dysphagic]`.
    pub counts: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl Node {
    pub fn n_samples(&self) -> usize {
        self.counts[0] + self.counts[1]
    }

    /// Majority class; an even split goes to dysphagic.
    pub fn majority(&self) -> Label {
        if self.counts[1] >= self.counts[0] {
            Label::Dysphagic
        } else {
            Label::Normal
        }
    }
}

/// Binary tree stored as a node array with the root at index 0. Samples
/// with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn is_leaf_only(&self) -> bool {
        self.nodes[0].split.is_none()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i].split {
                None => 0,
                Some(s) => 1 + go(nodes, s.left).max(go(nodes, s.right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf(&self, x: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while let Some(s) = &node.split {
            node = &self.nodes[if x[s.feature] <= s.threshold { s.left } else { s.right }];
        }
        node
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        self.leaf(x).majority()
    }

    /// Mean decrease in impurity per feature, normalized to sum 1; all zeros
    /// for a single-leaf tree.
    pub fn importance(&self, n_features: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_features];
        let root = self.nodes[0].n_samples() as f64;
        for node in &self.nodes {
            if let Some(s) = &node.split {
                imp[s.feature] += node.n_samples() as f64 / root * s.impurity_decrease;
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }

    pub(crate) fn check(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Model("tree without nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(s) = &node.split {
                let ok = s.feature < n_features
                    && s.left > i
                    && s.right > i
                    && s.left < self.nodes.len()
                    && s.right < self.nodes.len()
                    && s.threshold.is_finite();
                if !ok {
                    return Err(Error::Model(format!("node {i} has an invalid split")));
                }
            }
        }
        Ok(())
    }
}

/// `n` row indices drawn with replacement.
pub fn bootstrap_indices(rng: &mut Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

struct Builder<'a> {
    data: &'a LabeledDataset,
    rng: &'a mut Rng,
    max_features: usize,
    min_samples_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = class_counts(self.data, rows);
        let id = self.nodes.len();
        self.nodes.push(Node { counts, split: None });

        let pure = counts[0] == 0 || counts[1] == 0;
        let too_small = rows.len() < 2 * self.min_samples_leaf.max(1);
        let too_deep = self.max_depth.is_some_and(|d| depth >= d);
        if pure || too_small || too_deep {
            return id;
        }

        let n_features = self.data.n_features();
        let candidates = sample(&mut *self.rng, n_features, self.max_features.min(n_features)).into_vec();
        let Some(best) = best_split_with_min_leaf(self.data, rows, &candidates, self.min_samples_leaf)
        else {
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.features[r][best.feature] <= best.threshold);
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            impurity_decrease: best.impurity_decrease,
        });
        id
    }
}

/// Grows one CART tree. With `params.bootstrap` the first `n` draws from
/// `rng` pick the bootstrap sample; feature subsets are drawn afterwards.
pub fn train_tree(data: &LabeledDataset, rng: &mut Rng, params: &ForestParams) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::Training("cannot grow a tree on an empty dataset".into()));
    }
    let rows = if params.bootstrap {
        bootstrap_indices(rng, data.len())
    } else {
        (0..data.len()).collect()
    };
    let mut builder = Builder {
        data,
        max_features: params.resolved_max_features(data.n_features()),
        min_samples_leaf: params.min_samples_leaf,
        max_depth: params.max_depth,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(&rows, 0);
    Ok(DecisionTree { nodes: builder.nodes })
}
