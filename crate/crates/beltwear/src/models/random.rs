//! Chance baseline: predictions are drawn from the training label
//! frequencies and ignore the features entirely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabeledSet, TrainedModel};
use crate::error::Result;

/// Label-frequency sampler. Every prediction batch restarts the stored
/// stream, so the same batch size always yields the same labels.
#[derive(Debug, Clone)]
pub struct RandomClassifier {
    /// Training occurrences per class.
    pub(crate) class_counts: Vec<usize>,
    pub(crate) seed: u64,
    pub(crate) feature_dim: usize,
}

impl RandomClassifier {
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_counts.len()
    }

    /// Draw `count` labels with probability proportional to the training
    /// counts.
    pub fn predict_batch(&self, count: usize) -> Vec<usize> {
        let total: usize = self.class_counts.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count)
            .map(|_| {
                let mut ticket = rng.random_range(0..total);
                for (class, &c) in self.class_counts.iter().enumerate() {
                    if ticket < c {
                        return class;
                    }
                    ticket -= c;
                }
                unreachable!("ticket below the count total")
            })
            .collect()
    }
}

/// Record the label distribution; nothing else is learned.
pub fn train_random(data: &LabeledSet, seed: u64) -> Result<TrainedModel> {
    Ok(TrainedModel::Random(RandomClassifier {
        class_counts: data.class_counts(),
        seed,
        feature_dim: data.feature_dim(),
    }))
}
