//! Random forest: bagged CART trees with per-node feature sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{grow_tree, DecisionTree, FeaturePolicy, TreeParams};
use super::{argmax_count, LabeledSet, TrainedModel};
use crate::error::{Error, Result};

/// Forest training settings.
#[derive(Debug, Clone)]
pub struct ForestParams {
    pub tree_count: usize,
    /// Growth limits applied to every tree.
    pub tree: TreeParams,
    /// Tree `i` trains from an independent stream seeded `seed XOR i`.
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree_count: 100,
            tree: TreeParams::default(),
            seed: 0,
        }
    }
}

/// A bag of CART trees voting by majority, ties to the lowest class id.
#[derive(Debug, Clone)]
pub struct RandomForest {
    pub(crate) trees: Vec<DecisionTree>,
    pub(crate) feature_dim: usize,
    pub(crate) class_count: usize,
}

impl RandomForest {
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn predict_one(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.class_count];
        for tree in &self.trees {
            votes[tree.predict_one(x)] += 1;
        }
        argmax_count(&votes)
    }
}

/// Candidate features per split: `ceil(sqrt(feature_dim))`.
pub fn split_candidate_count(feature_dim: usize) -> usize {
    (feature_dim as f64).sqrt().ceil() as usize
}

/// Train a forest. Each tree draws a bootstrap sample (n rows with
/// replacement) and then considers `ceil(sqrt(d))` freshly sampled features
/// at every split, all from its own seeded stream, so training is
/// deterministic and independent of thread scheduling.
pub fn train_forest(data: &LabeledSet, params: &ForestParams) -> Result<TrainedModel> {
    if params.tree_count == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let n = data.len();
    let m = split_candidate_count(data.feature_dim());
    let trees: Vec<DecisionTree> = (0..params.tree_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ i as u64);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_tree(
                data,
                bootstrap,
                &params.tree,
                FeaturePolicy::Sampled { m, rng: &mut rng },
            )
        })
        .collect::<Result<_>>()?;
    Ok(TrainedModel::Forest(RandomForest {
        trees,
        feature_dim: data.feature_dim(),
        class_count: data.class_count(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn blob_data(n_per_class: usize, seed: u64) -> LabeledSet {
        // Three well-separated Gaussian-ish blobs in 8 dimensions.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..3usize {
            for _ in 0..n_per_class {
                let center = class as f64 * 4.0;
                features.push(
                    (0..8)
                        .map(|_| center + rng.random_range(-1.0..1.0))
                        .collect(),
                );
                labels.push(class);
            }
        }
        LabeledSet::new(
            features,
            labels,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap()
    }

    #[test]
    fn candidate_count_is_ceil_sqrt() {
        assert_eq!(split_candidate_count(1), 1);
        assert_eq!(split_candidate_count(16), 4);
        assert_eq!(split_candidate_count(17), 5);
        assert_eq!(split_candidate_count(6976), 84);
    }

    #[test]
    fn forest_separates_blobs() {
        let data = blob_data(30, 0xf0);
        let params = ForestParams {
            tree_count: 25,
            ..ForestParams::default()
        };
        let model = train_forest(&data, &params).unwrap();
        let correct = data
            .features()
            .iter()
            .zip(data.labels())
            .filter(|(x, &y)| model.predict_one(x).unwrap() == y)
            .count();
        assert!(correct as f64 / data.len() as f64 > 0.95);
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let data = blob_data(15, 0xf1);
        let params = ForestParams {
            tree_count: 10,
            seed: 42,
            ..ForestParams::default()
        };
        let a = train_forest(&data, &params).unwrap();
        let b = train_forest(&data, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..14.0)).collect();
            assert_eq!(a.predict_one(&x).unwrap(), b.predict_one(&x).unwrap());
        }
    }

    #[test]
    fn different_seeds_usually_differ_somewhere() {
        let data = blob_data(15, 0xf2);
        let mk = |seed| {
            let params = ForestParams {
                tree_count: 5,
                seed,
                ..ForestParams::default()
            };
            let TrainedModel::Forest(f) = train_forest(&data, &params).unwrap() else {
                panic!()
            };
            f
        };
        let a = mk(1);
        let b = mk(2);
        // Same data, different bootstraps: split thresholds come from
        // different sample midpoints, so the trees cannot all coincide.
        assert_ne!(format!("{:?}", a.trees), format!("{:?}", b.trees));
    }

    #[test]
    fn single_tree_forest_still_votes() {
        let data = blob_data(10, 0xf3);
        let params = ForestParams {
            tree_count: 1,
            ..ForestParams::default()
        };
        let model = train_forest(&data, &params).unwrap();
        model.predict_one(&vec![0.0; 8]).unwrap();
    }
}
