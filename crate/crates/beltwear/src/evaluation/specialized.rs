//! Per-configuration specialists: one model for each of the 18 machine
//! parameter settings, evaluated only on its own slice of the corpus.

use super::{evaluate, FeatureSet, Task};
use crate::dataset::ParameterConfiguration;
use crate::error::{Error, Result};
use crate::models::{train_model, ModelKind, ModelParams, TrainedModel};
use crate::util::fmt_f64;

/// Outcome for one parameter configuration's specialist.
#[derive(Debug)]
pub struct ConfigOutcome {
    pub configuration: ParameterConfiguration,
    pub train_rows: usize,
    pub test_rows: usize,
    pub accuracy: f64,
    pub model: TrainedModel,
}

/// All 18 specialists plus their unweighted mean accuracy.
#[derive(Debug)]
pub struct SpecializedResult {
    pub per_config: Vec<ConfigOutcome>,
    pub mean_accuracy: f64,
}

/// Train and evaluate one model per parameter configuration. Every
/// configuration must contribute both training and test rows.
pub fn train_specialized(
    features: &FeatureSet,
    task: Task,
    model: ModelKind,
    params: &ModelParams,
    test_repetitions: &[u8],
    seed: u64,
) -> Result<SpecializedResult> {
    let configurations = ParameterConfiguration::all();
    let mut per_config = Vec::with_capacity(configurations.len());
    let mut accuracy_sum = 0.0;
    for configuration in configurations {
        let subset = features.filter_configuration(&configuration);
        if subset.is_empty() {
            return Err(Error::DegenerateData(format!(
                "no feature rows for configuration {configuration}"
            )));
        }
        let (train, test) = subset.split_by_repetition(test_repetitions)?;
        if train.is_empty() {
            return Err(Error::DegenerateData(format!(
                "configuration {configuration} has no training rows"
            )));
        }
        if test.is_empty() {
            return Err(Error::DegenerateData(format!(
                "configuration {configuration} has no test rows"
            )));
        }
        let train_set = train.to_labeled(task, false)?;
        let test_set = test.to_labeled(task, false)?;
        let trained = train_model(model, &train_set, params, seed)?;
        let outcome = evaluate(&trained, &test_set)?;
        accuracy_sum += outcome.accuracy;
        per_config.push(ConfigOutcome {
            configuration,
            train_rows: train.len(),
            test_rows: test.len(),
            accuracy: outcome.accuracy,
            model: trained,
        });
    }
    let mean_accuracy = accuracy_sum / per_config.len() as f64;
    Ok(SpecializedResult {
        per_config,
        mean_accuracy,
    })
}

/// One CSV row per configuration, in the canonical configuration order.
pub fn specialized_csv(result: &SpecializedResult) -> String {
    let mut out = String::from("feed,grit,material,train_rows,test_rows,accuracy\n");
    for c in &result.per_config {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.configuration.feed_speed,
            c.configuration.grit_size,
            c.configuration.material,
            c.train_rows,
            c.test_rows,
            fmt_f64(c.accuracy)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{config_complete_corpus, test_config, tiny_segmented_corpus};
    use super::super::{extract_feature_set, Task};
    use super::*;
    use crate::segmentation::SegmentKind;

    #[test]
    fn one_specialist_per_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let seg = config_complete_corpus(dir.path());
        let features =
            extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let result = train_specialized(
            &features,
            Task::Wear,
            ModelKind::Tree,
            &ModelParams::default(),
            &[3],
            0,
        )
        .unwrap();
        assert_eq!(result.per_config.len(), 18);
        let expected: Vec<_> = ParameterConfiguration::all();
        for (outcome, want) in result.per_config.iter().zip(expected) {
            assert_eq!(outcome.configuration, want);
            assert_eq!(outcome.train_rows, 2);
            assert_eq!(outcome.test_rows, 1);
        }
        // Only wear level 0 exists, so every specialist is trivially right.
        assert_eq!(result.mean_accuracy, 1.0);
    }

    #[test]
    fn missing_configurations_are_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let features =
            extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let err = train_specialized(
            &features,
            Task::Wear,
            ModelKind::Tree,
            &ModelParams::default(),
            &[3],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateData(_)), "{err:?}");
    }

    #[test]
    fn csv_has_one_row_per_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let seg = config_complete_corpus(dir.path());
        let features =
            extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let result = train_specialized(
            &features,
            Task::Wear,
            ModelKind::Tree,
            &ModelParams::default(),
            &[3],
            0,
        )
        .unwrap();
        let csv = specialized_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 19);
        assert_eq!(lines[0], "feed,grit,material,train_rows,test_rows,accuracy");
        assert_eq!(lines[1], "10,80,soft,2,1,1");
    }
}
