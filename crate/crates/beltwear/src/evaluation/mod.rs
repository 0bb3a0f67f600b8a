//! Experimental protocol: classification tasks, the repetition-based
//! train/test split, accuracy and confusion matrices, grid search over the
//! spectral parameter grid, and per-configuration specialized models.

mod features;
mod grid;
mod report;
mod specialized;
#[cfg(test)]
pub(crate) mod testutil;

pub use features::{
    extract_feature_set, load_features_csv, machine_state_feature_set, write_features_csv,
    FeatureRow, FeatureSet,
};
pub use grid::{grid_csv, grid_search, task_feature_set, GridEntry, GridOptions};
pub use report::{
    run_table, run_task, run_task_on_features, table_csv, write_report, RunOptions, RunReport,
    TableCell,
};
pub use specialized::{specialized_csv, train_specialized, ConfigOutcome, SpecializedResult};

use std::fmt;
use std::str::FromStr;

use crate::dataset::{Material, SandingRecordMeta, FEED_SPEEDS, GRIT_SIZES, WEAR_LEVELS};
use crate::error::{Error, Result};
use crate::models::{LabeledSet, TrainedModel};
use crate::segmentation::SegmentKind;

/// One of the five classification problems posed over the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Five belt wear levels.
    Wear,
    /// Sanding versus idle, decided from short state windows.
    MachineState,
    /// Three feed speeds.
    FeedSpeed,
    /// Three grit sizes.
    GritSize,
    /// Soft versus hard workpiece material.
    Material,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Wear,
        Task::MachineState,
        Task::FeedSpeed,
        Task::GritSize,
        Task::Material,
    ];

    pub fn class_count(&self) -> usize {
        match self {
            Task::Wear => WEAR_LEVELS.len(),
            Task::MachineState => 2,
            Task::FeedSpeed => FEED_SPEEDS.len(),
            Task::GritSize => GRIT_SIZES.len(),
            Task::Material => Material::ALL.len(),
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        match self {
            Task::Wear => WEAR_LEVELS.iter().map(|w| w.to_string()).collect(),
            Task::MachineState => vec!["sanding".into(), "idle".into()],
            Task::FeedSpeed => FEED_SPEEDS.iter().map(|f| f.to_string()).collect(),
            Task::GritSize => GRIT_SIZES.iter().map(|g| g.to_string()).collect(),
            Task::Material => Material::ALL.iter().map(|m| m.to_string()).collect(),
        }
    }

    /// Which cut windows this task's feature rows come from.
    pub fn segments(&self) -> &'static [SegmentKind] {
        match self {
            Task::MachineState => &[
                SegmentKind::Sanding,
                SegmentKind::PreIdle,
                SegmentKind::PostIdle,
            ],
            _ => &[SegmentKind::Analysis],
        }
    }

    /// Class index of one feature row.
    pub fn label_for(&self, meta: &SandingRecordMeta, segment: SegmentKind) -> Result<usize> {
        match self {
            Task::Wear => Ok(meta.wear_level as usize),
            Task::FeedSpeed => FEED_SPEEDS
                .iter()
                .position(|&f| f == meta.feed_speed)
                .ok_or_else(|| Error::Domain(format!("unknown feed speed {}", meta.feed_speed))),
            Task::GritSize => GRIT_SIZES
                .iter()
                .position(|&g| g == meta.grit_size)
                .ok_or_else(|| Error::Domain(format!("unknown grit size {}", meta.grit_size))),
            Task::Material => Ok(match meta.material {
                Material::Soft => 0,
                Material::Hard => 1,
            }),
            Task::MachineState => match segment {
                SegmentKind::Sanding => Ok(0),
                SegmentKind::PreIdle | SegmentKind::PostIdle => Ok(1),
                SegmentKind::Analysis => Err(Error::Domain(
                    "analysis windows carry no machine-state label".into(),
                )),
            },
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Wear => "wear",
            Task::MachineState => "machine_state",
            Task::FeedSpeed => "feed_speed",
            Task::GritSize => "grit_size",
            Task::Material => "material",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wear" => Ok(Task::Wear),
            "machine_state" | "state" => Ok(Task::MachineState),
            "feed_speed" | "feed" => Ok(Task::FeedSpeed),
            "grit_size" | "grit" => Ok(Task::GritSize),
            "material" => Ok(Task::Material),
            other => Err(Error::Config(format!(
                "unknown task {other:?} (expected wear, machine_state, feed_speed, grit_size or material)"
            ))),
        }
    }
}

/// Counts of true class (rows) against predicted class (columns).
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let n = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Trace over total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace: usize = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        trace as f64 / total as f64
    }

    /// CSV with a `true` label column and one column per predicted class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy plus the full confusion matrix of one evaluation run.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Score a trained model on a labeled test set.
pub fn evaluate(model: &TrainedModel, test: &LabeledSet) -> Result<Evaluation> {
    if model.feature_dim() != test.feature_dim() {
        return Err(Error::Mismatch(format!(
            "model expects {} features, test set has {}",
            model.feature_dim(),
            test.feature_dim()
        )));
    }
    if model.class_count() != test.class_count() {
        return Err(Error::Mismatch(format!(
            "model has {} classes, test set has {}",
            model.class_count(),
            test.class_count()
        )));
    }
    let predictions = model.predict_batch(test.features())?;
    let mut confusion = ConfusionMatrix::new(test.class_names().to_vec());
    for (&truth, &pred) in test.labels().iter().zip(&predictions) {
        confusion.record(truth, pred);
    }
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Position;
    use crate::models::{train_model, ModelKind, ModelParams};

    fn meta(wear: u8, feed: u16, grit: u16, material: Material, rep: u8) -> SandingRecordMeta {
        SandingRecordMeta {
            wear_level: wear,
            feed_speed: feed,
            grit_size: grit,
            material,
            position: Position::Center,
            repetition: rep,
            clip_path: format!("wavs/w{wear}_f{feed}_g{grit}.wav"),
        }
    }

    #[test]
    fn task_names_round_trip() {
        for task in Task::ALL {
            let back: Task = task.to_string().parse().unwrap();
            assert_eq!(back, task);
        }
        assert!("belt".parse::<Task>().is_err());
        assert_eq!("feed".parse::<Task>().unwrap(), Task::FeedSpeed);
    }

    #[test]
    fn class_counts_match_the_problem_definitions() {
        let expected = [5, 2, 3, 3, 2];
        for (task, want) in Task::ALL.iter().zip(expected) {
            assert_eq!(task.class_count(), want, "{task}");
            assert_eq!(task.class_names().len(), want);
        }
    }

    #[test]
    fn labels_index_into_the_class_lists() {
        let m = meta(3, 14, 240, Material::Hard, 1);
        assert_eq!(Task::Wear.label_for(&m, SegmentKind::Analysis).unwrap(), 3);
        assert_eq!(
            Task::FeedSpeed.label_for(&m, SegmentKind::Analysis).unwrap(),
            1
        );
        assert_eq!(
            Task::GritSize.label_for(&m, SegmentKind::Analysis).unwrap(),
            2
        );
        assert_eq!(
            Task::Material.label_for(&m, SegmentKind::Analysis).unwrap(),
            1
        );
        assert_eq!(
            Task::MachineState
                .label_for(&m, SegmentKind::Sanding)
                .unwrap(),
            0
        );
        assert_eq!(
            Task::MachineState
                .label_for(&m, SegmentKind::PostIdle)
                .unwrap(),
            1
        );
        assert!(Task::MachineState
            .label_for(&m, SegmentKind::Analysis)
            .is_err());
    }

    #[test]
    fn confusion_matrix_counts_and_accuracy() {
        // y = [0, 1, 1], predictions = [0, 1, 0].
        let mut m = ConfusionMatrix::new(vec!["a".into(), "b".into()]);
        m.record(0, 0);
        m.record(1, 1);
        m.record(1, 0);
        assert_eq!(m.counts(), &[vec![1, 0], vec![1, 1]]);
        assert_eq!(m.total(), 3);
        assert!((m.accuracy() - 2.0 / 3.0).abs() < 1e-12);
        let csv = m.to_csv();
        assert_eq!(csv, "true,a,b\na,1,0\nb,1,1\n");
    }

    #[test]
    fn confusion_row_sums_equal_true_class_counts() {
        let features: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let data = LabeledSet::new(
            features,
            labels.clone(),
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        let model = train_model(ModelKind::Knn, &data, &ModelParams::default(), 0).unwrap();
        let eval = evaluate(&model, &data).unwrap();
        for class in 0..3 {
            let want = labels.iter().filter(|&&l| l == class).count();
            let got: usize = eval.confusion.counts()[class].iter().sum();
            assert_eq!(got, want, "row sum for class {class}");
        }
        assert_eq!(eval.confusion.total(), 30);
    }

    #[test]
    fn perfect_predictions_give_a_diagonal_matrix() {
        let features = vec![vec![0.0], vec![10.0], vec![0.1], vec![9.9]];
        let labels = vec![0, 1, 0, 1];
        let data = LabeledSet::new(features, labels, vec!["a".into(), "b".into()]).unwrap();
        let model = train_model(ModelKind::Tree, &data, &ModelParams::default(), 0).unwrap();
        let eval = evaluate(&model, &data).unwrap();
        assert_eq!(eval.accuracy, 1.0);
        assert_eq!(eval.confusion.counts(), &[vec![2, 0], vec![0, 2]]);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let data = LabeledSet::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let model = train_model(ModelKind::Tree, &data, &ModelParams::default(), 0).unwrap();
        let narrow = LabeledSet::new(
            vec![vec![0.0], vec![1.0]],
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(evaluate(&model, &narrow).is_err());
    }
}
