//! From-scratch classifiers: decision tree, random forest, k-nearest
//! neighbour, multilayer perceptron, and a label-frequency random baseline.
//!
//! All models train on a [`LabeledSet`], predict through the [`TrainedModel`]
//! enum, and serialize to a versioned text format via [`TrainedModel::save`]
//! and [`TrainedModel::load`]. Training that consumes randomness takes an
//! explicit seed and is deterministic in it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub mod forest;
mod io;
pub mod knn;
pub mod mlp;
pub mod random;
pub mod tree;

pub use forest::{train_forest, ForestParams, RandomForest};
pub use knn::{train_knn, KnnClassifier, KnnParams};
pub use mlp::{train_mlp, MlpClassifier, MlpParams};
pub use random::{train_random, RandomClassifier};
pub use tree::{gini, train_tree, DecisionTree, TreeParams};

/// Feature vectors with integer class labels, validated on construction.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledSet {
    /// Build a set, checking that it is nonempty, rectangular, finite, and
    /// that every label indexes into `class_names`.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::DegenerateData("no training rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::Mismatch(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if class_names.is_empty() {
            return Err(Error::DegenerateData("no classes".into()));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::DegenerateData("zero-width feature rows".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Mismatch(format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::DegenerateData(format!(
                    "row {i} feature {j} is not finite"
                )));
            }
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= class_names.len())
        {
            return Err(Error::Mismatch(format!(
                "row {i} labeled {l} but only {} classes exist",
                class_names.len()
            )));
        }
        Ok(LabeledSet {
            features,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Count rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Which classifier family a model belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Tree,
    Forest,
    Knn,
    Mlp,
    Random,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Knn,
        ModelKind::Mlp,
        ModelKind::Random,
    ];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Knn => "knn",
            ModelKind::Mlp => "mlp",
            ModelKind::Random => "random",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "forest" => Ok(ModelKind::Forest),
            "knn" => Ok(ModelKind::Knn),
            "mlp" => Ok(ModelKind::Mlp),
            "random" => Ok(ModelKind::Random),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?} (expected tree, forest, knn, mlp, random)"
            ))),
        }
    }
}

/// Hyperparameters for every model family, so callers can configure one
/// place and train any kind.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub tree: TreeParams,
    pub forest_trees: usize,
    pub knn_k: usize,
    pub mlp_hidden: Vec<usize>,
    pub mlp_epochs: usize,
    pub mlp_batch: usize,
    pub mlp_learning_rate: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            tree: TreeParams::default(),
            forest_trees: 100,
            knn_k: 5,
            mlp_hidden: vec![128],
            mlp_epochs: 200,
            mlp_batch: 32,
            mlp_learning_rate: 1e-3,
        }
    }
}

/// Train a model of the requested kind. `seed` feeds the forest, MLP, and
/// random baseline; tree and kNN training is deterministic without it.
pub fn train_model(
    kind: ModelKind,
    data: &LabeledSet,
    params: &ModelParams,
    seed: u64,
) -> Result<TrainedModel> {
    match kind {
        ModelKind::Tree => train_tree(data, &params.tree),
        ModelKind::Forest => train_forest(
            data,
            &ForestParams {
                tree_count: params.forest_trees,
                tree: params.tree.clone(),
                seed,
            },
        ),
        ModelKind::Knn => train_knn(data, &KnnParams { k: params.knn_k }),
        ModelKind::Mlp => train_mlp(
            data,
            &MlpParams {
                hidden: params.mlp_hidden.clone(),
                epochs: params.mlp_epochs,
                batch_size: params.mlp_batch,
                learning_rate: params.mlp_learning_rate,
                seed,
            },
        ),
        ModelKind::Random => train_random(data, seed),
    }
}

/// A trained classifier of any family.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Tree(DecisionTree),
    Forest(RandomForest),
    Knn(KnnClassifier),
    Mlp(MlpClassifier),
    Random(RandomClassifier),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Tree(_) => ModelKind::Tree,
            TrainedModel::Forest(_) => ModelKind::Forest,
            TrainedModel::Knn(_) => ModelKind::Knn,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
            TrainedModel::Random(_) => ModelKind::Random,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            TrainedModel::Tree(m) => m.feature_dim(),
            TrainedModel::Forest(m) => m.feature_dim(),
            TrainedModel::Knn(m) => m.feature_dim(),
            TrainedModel::Mlp(m) => m.feature_dim(),
            TrainedModel::Random(m) => m.feature_dim(),
        }
    }

    pub fn class_count(&self) -> usize {
        match self {
            TrainedModel::Tree(m) => m.class_count(),
            TrainedModel::Forest(m) => m.class_count(),
            TrainedModel::Knn(m) => m.class_count(),
            TrainedModel::Mlp(m) => m.class_count(),
            TrainedModel::Random(m) => m.class_count(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim() {
            return Err(Error::Mismatch(format!(
                "model expects {} features, input has {}",
                self.feature_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Predict one input. For the random baseline this always draws the
    /// first value of its stream; use [`TrainedModel::predict_batch`] to
    /// advance through it.
    pub fn predict_one(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        Ok(match self {
            TrainedModel::Tree(m) => m.predict_one(x),
            TrainedModel::Forest(m) => m.predict_one(x),
            TrainedModel::Knn(m) => m.predict_one(x),
            TrainedModel::Mlp(m) => m.predict_one(x),
            TrainedModel::Random(m) => m.predict_batch(1)[0],
        })
    }

    /// Predict a batch of inputs.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        for x in xs {
            self.check_dim(x)?;
        }
        Ok(match self {
            TrainedModel::Tree(m) => xs.iter().map(|x| m.predict_one(x)).collect(),
            TrainedModel::Forest(m) => xs.iter().map(|x| m.predict_one(x)).collect(),
            TrainedModel::Knn(m) => {
                use rayon::prelude::*;
                xs.par_iter().map(|x| m.predict_one(x)).collect()
            }
            TrainedModel::Mlp(m) => xs.iter().map(|x| m.predict_one(x)).collect(),
            TrainedModel::Random(m) => m.predict_batch(xs.len()),
        })
    }

    /// Serialize to the versioned text format.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        io::save(self, path)
    }

    /// Load any model kind from the versioned text format.
    pub fn load(path: &std::path::Path) -> Result<TrainedModel> {
        io::load(path)
    }
}

/// Majority vote with ties broken toward the lowest class id.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
