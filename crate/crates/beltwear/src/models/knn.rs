//! k-nearest-neighbour classifier on z-scored features.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{argmax_count, LabeledSet, TrainedModel};
use crate::error::{Error, Result};

/// Neighbour count.
#[derive(Debug, Clone, Copy)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// Stored training set, standardized per feature with the training mean and
/// (population) standard deviation; zero-variance features divide by 1.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    pub(crate) k: usize,
    pub(crate) mean: Vec<f64>,
    pub(crate) std: Vec<f64>,
    /// Standardized training rows.
    pub(crate) points: Vec<Vec<f64>>,
    pub(crate) labels: Vec<usize>,
    pub(crate) class_count: usize,
}

/// Max-heap entry ordered by `(distance, index)`, so the heap keeps the k
/// smallest under exactly the same total order a full sort would use.
#[derive(PartialEq)]
struct Neighbour {
    distance_sq: f64,
    index: usize,
}

impl Eq for Neighbour {}

impl Ord for Neighbour {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance_sq
            .total_cmp(&other.distance_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbour {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KnnClassifier {
    pub fn feature_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Indices of the k nearest training points by squared Euclidean
    /// distance, ties broken toward lower training index, nearest first.
    pub fn nearest(&self, x: &[f64]) -> Vec<usize> {
        let q = self.standardize(x);
        let mut heap: BinaryHeap<Neighbour> = BinaryHeap::with_capacity(self.k + 1);
        for (index, p) in self.points.iter().enumerate() {
            let distance_sq: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            heap.push(Neighbour { distance_sq, index });
            if heap.len() > self.k {
                heap.pop();
            }
        }
        let mut nearest: Vec<Neighbour> = heap.into_vec();
        nearest.sort_unstable_by(|a, b| a.cmp(b));
        nearest.into_iter().map(|n| n.index).collect()
    }

    pub fn predict_one(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.class_count];
        for i in self.nearest(x) {
            votes[self.labels[i]] += 1;
        }
        argmax_count(&votes)
    }
}

/// "Train" kNN: store the standardized set.
pub fn train_knn(data: &LabeledSet, params: &KnnParams) -> Result<TrainedModel> {
    if params.k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if params.k > data.len() {
        return Err(Error::Config(format!(
            "k = {} exceeds the {} training rows",
            params.k,
            data.len()
        )));
    }
    let n = data.len() as f64;
    let dim = data.feature_dim();
    let mut mean = vec![0.0; dim];
    for row in data.features() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; dim];
    for row in data.features() {
        for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in std.iter_mut() {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let points = data
        .features()
        .iter()
        .map(|row| {
            row.iter()
                .zip(&mean)
                .zip(&std)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();
    Ok(TrainedModel::Knn(KnnClassifier {
        k: params.k,
        mean,
        std,
        points,
        labels: data.labels().to_vec(),
        class_count: data.class_count(),
    }))
}
