//! Single end-to-end runs, the on-disk report layout, and the
//! feature-by-model accuracy table.

use std::path::{Path, PathBuf};

use super::features::FeatureSet;
use super::grid::task_feature_set;
use super::{evaluate, ConfusionMatrix, Task};
use crate::dsp::{FeatureMethod, SpectralConfig};
use crate::error::Result;
use crate::models::{train_model, ModelKind, ModelParams, TrainedModel};
use crate::segmentation::SegmentedCorpus;
use crate::util::{fmt_f64, write_atomic};

/// Everything needed to train and score one task with one feature and model
/// choice.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub task: Task,
    pub model: ModelKind,
    pub config: SpectralConfig,
    pub params: ModelParams,
    pub test_repetitions: Vec<u8>,
    pub augment_parameters: bool,
    pub seed: u64,
}

/// Result of one run, including the trained model for serialization.
#[derive(Debug)]
pub struct RunReport {
    pub task: Task,
    pub method: FeatureMethod,
    pub model_kind: ModelKind,
    pub config: SpectralConfig,
    pub train_rows: usize,
    pub test_rows: usize,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub model: TrainedModel,
}

/// Extract features for the task, split by repetition, train, evaluate.
pub fn run_task(seg: &SegmentedCorpus, opts: &RunOptions) -> Result<RunReport> {
    let features = task_feature_set(seg, &opts.config, opts.task, opts.seed)?;
    run_task_on_features(&features, opts)
}

/// As [`run_task`] but reusing an already extracted feature set. The set's
/// config must match the one in the options.
pub fn run_task_on_features(features: &FeatureSet, opts: &RunOptions) -> Result<RunReport> {
    let (train, test) = features.split_by_repetition(&opts.test_repetitions)?;
    let train_set = train.to_labeled(opts.task, opts.augment_parameters)?;
    let test_set = test.to_labeled(opts.task, opts.augment_parameters)?;
    let model = train_model(opts.model, &train_set, &opts.params, opts.seed)?;
    let outcome = evaluate(&model, &test_set)?;
    Ok(RunReport {
        task: opts.task,
        method: features.config.method,
        model_kind: opts.model,
        config: features.config,
        train_rows: train.len(),
        test_rows: test.len(),
        accuracy: outcome.accuracy,
        confusion: outcome.confusion,
        model,
    })
}

/// Write `accuracy.txt`, `confusion.csv` and `model.bw` under
/// `{dir}/{task}/{feature}_{model}/` and return that directory.
pub fn write_report(dir: &Path, report: &RunReport) -> Result<PathBuf> {
    let cell = dir
        .join(report.task.to_string())
        .join(format!("{}_{}", report.method, report.model_kind));
    let mut summary = String::new();
    summary.push_str(&format!("task={}\n", report.task));
    summary.push_str(&format!("feature={}\n", report.method));
    summary.push_str(&format!("model={}\n", report.model_kind));
    summary.push_str(&format!("window_ms={}\n", report.config.window_ms));
    summary.push_str(&format!("filter_count={}\n", report.config.filter_count));
    summary.push_str(&format!("coeff_count={}\n", report.config.coeff_count));
    summary.push_str(&format!("train_rows={}\n", report.train_rows));
    summary.push_str(&format!("test_rows={}\n", report.test_rows));
    summary.push_str(&format!("accuracy={}\n", fmt_f64(report.accuracy)));
    write_atomic(&cell.join("accuracy.txt"), summary.as_bytes())?;
    write_atomic(
        &cell.join("confusion.csv"),
        report.confusion.to_csv().as_bytes(),
    )?;
    report.model.save(&cell.join("model.bw"))?;
    Ok(cell)
}

/// Accuracy for one feature and model combination in the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub method: FeatureMethod,
    pub model: ModelKind,
    pub accuracy: f64,
}

/// Cross every feature method with every model family on one task. The
/// window, filter and coefficient counts come from `base.config`; its method
/// is ignored. Features are extracted once per method and shared across the
/// five models.
pub fn run_table(seg: &SegmentedCorpus, base: &RunOptions) -> Result<Vec<TableCell>> {
    let mut cells = Vec::with_capacity(FeatureMethod::ALL.len() * ModelKind::ALL.len());
    for method in FeatureMethod::ALL {
        let config = SpectralConfig { method, ..base.config };
        let features = task_feature_set(seg, &config, base.task, base.seed)?;
        let (train, test) = features.split_by_repetition(&base.test_repetitions)?;
        let train_set = train.to_labeled(base.task, base.augment_parameters)?;
        let test_set = test.to_labeled(base.task, base.augment_parameters)?;
        for model_kind in ModelKind::ALL {
            let model = train_model(model_kind, &train_set, &base.params, base.seed)?;
            let outcome = evaluate(&model, &test_set)?;
            cells.push(TableCell {
                method,
                model: model_kind,
                accuracy: outcome.accuracy,
            });
        }
    }
    Ok(cells)
}

/// Render table cells as CSV with feature rows and model columns.
pub fn table_csv(cells: &[TableCell]) -> String {
    let mut out = String::from("feature");
    for model in ModelKind::ALL {
        out.push(',');
        out.push_str(&model.to_string());
    }
    out.push('\n');
    for method in FeatureMethod::ALL {
        out.push_str(&method.to_string());
        for model in ModelKind::ALL {
            out.push(',');
            if let Some(cell) = cells
                .iter()
                .find(|c| c.method == method && c.model == model)
            {
                out.push_str(&fmt_f64(cell.accuracy));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{test_config, tiny_segmented_corpus};
    use super::*;

    fn options(task: Task, model: ModelKind) -> RunOptions {
        RunOptions {
            task,
            model,
            config: test_config(),
            params: ModelParams::default(),
            test_repetitions: vec![3],
            augment_parameters: false,
            seed: 0,
        }
    }

    #[test]
    fn run_task_reports_split_sizes_and_confusion() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let report = run_task(&seg, &options(Task::Wear, ModelKind::Tree)).unwrap();
        assert_eq!(report.train_rows, 8);
        assert_eq!(report.test_rows, 4);
        assert_eq!(report.confusion.total(), 4);
        assert!((0.0..=1.0).contains(&report.accuracy));
        assert_eq!(report.method, FeatureMethod::Mfcc);
    }

    #[test]
    fn machine_state_run_uses_state_windows() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let report = run_task(&seg, &options(Task::MachineState, ModelKind::Knn)).unwrap();
        // Two rows per record: one sanding window, one idle window.
        assert_eq!(report.train_rows, 16);
        assert_eq!(report.test_rows, 8);
        // Sanding and idle tones are far apart, nearest neighbors must win.
        assert!(report.accuracy > 0.9, "accuracy {}", report.accuracy);
    }

    #[test]
    fn write_report_lays_out_the_cell_directory() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let report = run_task(&seg, &options(Task::Wear, ModelKind::Tree)).unwrap();
        let out = dir.path().join("report");
        let cell = write_report(&out, &report).unwrap();
        assert_eq!(cell, out.join("wear").join("mfcc_tree"));
        let summary = std::fs::read_to_string(cell.join("accuracy.txt")).unwrap();
        assert!(summary.contains("task=wear\n"));
        assert!(summary.contains(&format!("accuracy={}\n", fmt_f64(report.accuracy))));
        let confusion = std::fs::read_to_string(cell.join("confusion.csv")).unwrap();
        assert!(confusion.starts_with("true,0,1,2,3,4\n"));
        let reloaded = TrainedModel::load(&cell.join("model.bw")).unwrap();
        assert_eq!(reloaded.feature_dim(), report.model.feature_dim());
    }

    #[test]
    fn table_covers_every_feature_model_pair() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let mut base = options(Task::Wear, ModelKind::Tree);
        base.params.forest_trees = 10;
        base.params.mlp_hidden = vec![8];
        base.params.mlp_epochs = 3;
        let cells = run_table(&seg, &base).unwrap();
        assert_eq!(cells.len(), 25);
        for cell in &cells {
            assert!(
                cell.accuracy.is_finite() && (0.0..=1.0).contains(&cell.accuracy),
                "{cell:?}"
            );
        }
        let csv = table_csv(&cells);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "feature,tree,forest,knn,mlp,random");
        assert!(lines[1].starts_with("spectrogram,"));
        assert!(lines[3].starts_with("mfcc,"));
        // Every data cell is filled.
        for line in &lines[1..] {
            assert_eq!(line.matches(',').count(), 5);
            assert!(!line.ends_with(','), "{line}");
        }
    }
}
