//! CART decision tree with Gini impurity and midpoint thresholds.
//!
//! Trees grow until nodes are pure or unsplittable (or an optional depth
//! cap). Every choice is deterministic: the best split minimizes weighted
//! Gini impurity, ties go to the threshold gap widest relative to the sample
//! spacing on either side of it, then the lower feature index, then the
//! lower threshold; leaf ties go to the lowest class id. Zero-gain splits
//! are allowed as long as the node is impure and a boundary exists, so
//! training accuracy on consistent data reaches 1.0 even on parity-style
//! label patterns where no single split improves impurity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{argmax_count, LabeledSet, TrainedModel};
use crate::error::{Error, Result};

/// Gini impurity of a class histogram: `1 - sum((c/n)^2)`. Zero for an
/// empty histogram.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

/// Tree growth limits.
#[derive(Debug, Clone)]
pub struct TreeParams {
    /// Nodes with fewer rows become leaves.
    pub min_samples_split: usize,
    /// Maximum split depth; the root is at depth 0. `None` grows to purity.
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split: 2,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
    },
}

/// A trained CART tree stored as a flat node arena; node 0 is the root.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) feature_dim: usize,
    pub(crate) class_count: usize,
}

impl DecisionTree {
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Depth of the deepest leaf; a lone root leaf has depth 0.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Classify one input: descend left when `x[feature] <= threshold`.
    pub fn predict_one(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// How split candidates are chosen at each node.
pub(crate) enum FeaturePolicy<'r> {
    /// Consider every feature.
    All,
    /// Consider a fresh uniform sample of `m` features per node, drawn from
    /// the forest's per-tree RNG.
    Sampled { m: usize, rng: &'r mut ChaCha8Rng },
}

struct Builder<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [usize],
    class_count: usize,
    params: &'a TreeParams,
    nodes: Vec<Node>,
    /// Permutation scratch for sampled feature policies.
    feature_pool: Vec<usize>,
}

struct BestSplit {
    weighted_gini: f64,
    /// Value gap at the threshold relative to the sample spacing just
    /// beside it, in (0, 1]. Wider is better at equal impurity: a split
    /// that separates the sample by chance sits in the middle of a dense
    /// run and its gap is no wider than the neighboring spacings, while a
    /// genuine class boundary opens a gap well above them.
    margin: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> Builder<'a> {
    /// Pick the candidate feature list for one node, sorted ascending so
    /// tie-breaking by feature index is independent of sampling order.
    fn candidates(&mut self, policy: &mut FeaturePolicy<'_>) -> &[usize] {
        match policy {
            FeaturePolicy::All => &self.feature_pool,
            FeaturePolicy::Sampled { m, rng } => {
                let d = self.feature_pool.len();
                let m = (*m).min(d);
                for i in 0..m {
                    let j = rng.random_range(i..d);
                    self.feature_pool.swap(i, j);
                }
                self.feature_pool[..m].sort_unstable();
                &self.feature_pool[..m]
            }
        }
    }

    fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn best_split(&mut self, indices: &[usize], policy: &mut FeaturePolicy<'_>) -> Option<BestSplit> {
        let n = indices.len();
        let mut best: Option<BestSplit> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);

        // The candidate slice borrows the builder's scratch; copy the few
        // sampled indices out so the split scan can borrow freely.
        let candidate_features: Vec<usize> = self.candidates(policy).to_vec();
        for feature in candidate_features {
            sorted.clear();
            sorted.extend(
                indices
                    .iter()
                    .map(|&i| (self.features[i][feature], self.labels[i])),
            );
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_counts = vec![0usize; self.class_count];
            let mut right_counts = self.class_counts(indices);
            for i in 0..n - 1 {
                let (value, label) = sorted[i];
                left_counts[label] += 1;
                right_counts[label] -= 1;
                let next_value = sorted[i + 1].0;
                if value == next_value {
                    continue;
                }
                let threshold = value + (next_value - value) / 2.0;
                let gap = next_value - value;
                // Mean of up to three sample spacings on each side of the
                // boundary; zero when a side holds a single sample.
                let left_gaps = i.min(3);
                let mut d_left = 0.0;
                for k in 0..left_gaps {
                    d_left += sorted[i - k].0 - sorted[i - k - 1].0;
                }
                if left_gaps > 0 {
                    d_left /= left_gaps as f64;
                }
                let right_gaps = (n - 2 - i).min(3);
                let mut d_right = 0.0;
                for k in 0..right_gaps {
                    d_right += sorted[i + 2 + k].0 - sorted[i + 1 + k].0;
                }
                if right_gaps > 0 {
                    d_right /= right_gaps as f64;
                }
                let margin = gap / (gap + d_left + d_right);
                let n_left = (i + 1) as f64;
                let n_right = (n - i - 1) as f64;
                let weighted = (n_left * gini(&left_counts) + n_right * gini(&right_counts))
                    / n as f64;
                let better = match &best {
                    None => true,
                    Some(b) => {
                        weighted < b.weighted_gini
                            || (weighted == b.weighted_gini
                                && (margin > b.margin
                                    || (margin == b.margin
                                        && (feature < b.feature
                                            || (feature == b.feature
                                                && threshold < b.threshold)))))
                    }
                };
                if better {
                    best = Some(BestSplit {
                        weighted_gini: weighted,
                        margin,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, indices: &mut Vec<usize>, depth: usize, policy: &mut FeaturePolicy<'_>) -> usize {
        let counts = self.class_counts(indices);
        let majority = argmax_count(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|cap| depth >= cap);

        if pure || depth_capped || indices.len() < self.params.min_samples_split {
            self.nodes.push(Node::Leaf { class: majority });
            return self.nodes.len() - 1;
        }
        let Some(split) = self.best_split(indices, policy) else {
            self.nodes.push(Node::Leaf { class: majority });
            return self.nodes.len() - 1;
        };

        let (mut left, mut right): (Vec<usize>, Vec<usize>) = indices
            .drain(..)
            .partition(|&i| self.features[i][split.feature] <= split.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());

        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left_id = self.grow(&mut left, depth + 1, policy);
        let right_id = self.grow(&mut right, depth + 1, policy);
        if let Node::Split { left, right, .. } = &mut self.nodes[at] {
            *left = left_id;
            *right = right_id;
        }
        at
    }
}

/// Grow a tree over `indices` (with repeats allowed, as bootstrap samples
/// have) under the given feature policy.
pub(crate) fn grow_tree(
    data: &LabeledSet,
    indices: Vec<usize>,
    params: &TreeParams,
    mut policy: FeaturePolicy<'_>,
) -> Result<DecisionTree> {
    if indices.is_empty() {
        return Err(Error::DegenerateData("cannot grow a tree on no rows".into()));
    }
    let mut builder = Builder {
        features: data.features(),
        labels: data.labels(),
        class_count: data.class_count(),
        params,
        nodes: Vec::new(),
        feature_pool: (0..data.feature_dim()).collect(),
    };
    let mut indices = indices;
    builder.grow(&mut indices, 0, &mut policy);
    Ok(DecisionTree {
        nodes: builder.nodes,
        feature_dim: data.feature_dim(),
        class_count: data.class_count(),
    })
}

/// Train a CART tree on the full set.
pub fn train_tree(data: &LabeledSet, params: &TreeParams) -> Result<TrainedModel> {
    let tree = grow_tree(data, (0..data.len()).collect(), params, FeaturePolicy::All)?;
    Ok(TrainedModel::Tree(tree))
}
