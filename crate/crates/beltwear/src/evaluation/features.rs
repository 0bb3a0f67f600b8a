//! Feature rows keyed by recording metadata: extraction over a segmented
//! corpus, the repetition-based split, labeled-set conversion, and the
//! feature CSV format.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Task;
use crate::dataset::{ParameterConfiguration, SandingRecordMeta, REPETITIONS};
use crate::dsp::{extract_features, SpectralConfig};
use crate::error::{Error, Result};
use crate::models::LabeledSet;
use crate::segmentation::{SegmentKind, SegmentedCorpus};
use crate::util::{fmt_f64, write_atomic};

/// One clip window's flattened features plus everything known about it.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub meta: SandingRecordMeta,
    pub segment: SegmentKind,
    pub values: Vec<f64>,
}

/// Extracted features for a set of windows, all under one spectral
/// configuration.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub config: SpectralConfig,
    pub rows: Vec<FeatureRow>,
}

/// Extract features for the given window kinds of every record, in record
/// order with the given segment order inside each record.
pub fn extract_feature_set(
    seg: &SegmentedCorpus,
    config: &SpectralConfig,
    segments: &[SegmentKind],
) -> Result<FeatureSet> {
    if segments.is_empty() {
        return Err(Error::Config("no window kinds requested".into()));
    }
    let jobs: Vec<(&SandingRecordMeta, SegmentKind)> = seg
        .records
        .iter()
        .flat_map(|r| segments.iter().map(move |&s| (r, s)))
        .collect();
    extract_rows(seg, config, &jobs)
}

/// Build the sanding-versus-idle set: every record contributes its sanding
/// window plus one idle window, picked from pre or post by a seeded coin so
/// the two classes stay balanced in every repetition split.
pub fn machine_state_feature_set(
    seg: &SegmentedCorpus,
    config: &SpectralConfig,
    seed: u64,
) -> Result<FeatureSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(&SandingRecordMeta, SegmentKind)> = seg
        .records
        .iter()
        .flat_map(|r| {
            let idle = if rng.random_range(0..2u32) == 0 {
                SegmentKind::PreIdle
            } else {
                SegmentKind::PostIdle
            };
            [(r, SegmentKind::Sanding), (r, idle)]
        })
        .collect();
    extract_rows(seg, config, &jobs)
}

fn extract_rows(
    seg: &SegmentedCorpus,
    config: &SpectralConfig,
    jobs: &[(&SandingRecordMeta, SegmentKind)],
) -> Result<FeatureSet> {
    let rows: Vec<FeatureRow> = jobs
        .par_iter()
        .map(|&(record, segment)| {
            let clip = seg.load_window(record, segment)?;
            let features = extract_features(&clip, config)?;
            Ok(FeatureRow {
                meta: record.clone(),
                segment,
                values: features.values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet {
        config: *config,
        rows,
    })
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Split into (train, test) by repetition number. The sets partition the
    /// rows; either side may come out empty, which training rejects later.
    pub fn split_by_repetition(&self, test_repetitions: &[u8]) -> Result<(FeatureSet, FeatureSet)> {
        if test_repetitions.is_empty() {
            return Err(Error::Config("no test repetitions given".into()));
        }
        for &rep in test_repetitions {
            if !REPETITIONS.contains(&rep) {
                return Err(Error::Config(format!(
                    "repetition {rep} not in {REPETITIONS:?}"
                )));
            }
        }
        let (test, train): (Vec<FeatureRow>, Vec<FeatureRow>) = self
            .rows
            .iter()
            .cloned()
            .partition(|row| test_repetitions.contains(&row.meta.repetition));
        Ok((
            FeatureSet {
                config: self.config,
                rows: train,
            },
            FeatureSet {
                config: self.config,
                rows: test,
            },
        ))
    }

    /// Rows belonging to one machine parameter configuration.
    pub fn filter_configuration(&self, configuration: &ParameterConfiguration) -> FeatureSet {
        FeatureSet {
            config: self.config,
            rows: self
                .rows
                .iter()
                .filter(|row| row.meta.parameter_configuration() == *configuration)
                .cloned()
                .collect(),
        }
    }

    /// Convert to a labeled training set for `task`. With
    /// `augment_parameters` the numeric (feed, grit, material) triple is
    /// appended to every feature vector.
    pub fn to_labeled(&self, task: Task, augment_parameters: bool) -> Result<LabeledSet> {
        let mut features = Vec::with_capacity(self.rows.len());
        let mut labels = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut values = row.values.clone();
            if augment_parameters {
                values.push(row.meta.feed_speed as f64);
                values.push(row.meta.grit_size as f64);
                values.push(row.meta.material.as_f64());
            }
            features.push(values);
            labels.push(task.label_for(&row.meta, row.segment)?);
        }
        LabeledSet::new(features, labels, task.class_names())
    }
}

const FEATURE_COLUMNS: &str = "clip_path,wear,feed,grit,material,position,repetition,segment";

/// Write the set as CSV. The first line records the spectral configuration;
/// the header then names the metadata columns and `v0..v{d-1}`.
pub fn write_features_csv(set: &FeatureSet, path: &Path) -> Result<()> {
    let dim = match set.rows.first() {
        Some(row) => row.values.len(),
        None => return Err(Error::Domain("refusing to write an empty feature set".into())),
    };
    if let Some(bad) = set.rows.iter().find(|r| r.values.len() != dim) {
        return Err(Error::Mismatch(format!(
            "row for {} has {} values, expected {dim}",
            bad.meta.clip_path,
            bad.values.len()
        )));
    }
    let mut out = String::with_capacity(set.rows.len() * (dim * 20 + 64));
    let c = &set.config;
    out.push_str(&format!(
        "# method={} window_ms={} filter_count={} coeff_count={} sample_rate={}\n",
        c.method, c.window_ms, c.filter_count, c.coeff_count, c.sample_rate
    ));
    out.push_str(FEATURE_COLUMNS);
    for i in 0..dim {
        out.push_str(&format!(",v{i}"));
    }
    out.push('\n');
    for row in &set.rows {
        let m = &row.meta;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            m.clip_path,
            m.wear_level,
            m.feed_speed,
            m.grit_size,
            m.material,
            m.position,
            m.repetition,
            row.segment
        ));
        for v in &row.values {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Load a feature CSV written by [`write_features_csv`].
pub fn load_features_csv(path: &Path) -> Result<FeatureSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, meta_line) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let config = parse_config_line(path, meta_line)?;

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 2, "missing header"))?;
    let dim = match header.strip_prefix(FEATURE_COLUMNS) {
        Some(rest) => rest.split(',').skip(1).count(),
        None => return Err(Error::parse(path, 2, "unrecognized header")),
    };
    if dim == 0 {
        return Err(Error::parse(path, 2, "header lists no feature columns"));
    }

    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 + dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} fields, got {}", 8 + dim, fields.len()),
            ));
        }
        let parse_err =
            |what: &str, tok: &str| Error::parse(path, line_no, format!("invalid {what} {tok:?}"));
        let meta = SandingRecordMeta {
            clip_path: fields[0].to_string(),
            wear_level: fields[1].parse().map_err(|_| parse_err("wear", fields[1]))?,
            feed_speed: fields[2].parse().map_err(|_| parse_err("feed", fields[2]))?,
            grit_size: fields[3].parse().map_err(|_| parse_err("grit", fields[3]))?,
            material: fields[4]
                .parse()
                .map_err(|_| parse_err("material", fields[4]))?,
            position: fields[5]
                .parse()
                .map_err(|_| parse_err("position", fields[5]))?,
            repetition: fields[6]
                .parse()
                .map_err(|_| parse_err("repetition", fields[6]))?,
        };
        meta.validate()
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let segment: SegmentKind = fields[7]
            .parse()
            .map_err(|_| parse_err("segment", fields[7]))?;
        let mut values = Vec::with_capacity(dim);
        for tok in &fields[8..] {
            let v: f64 = tok.parse().map_err(|_| parse_err("value", tok))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line_no, "non-finite feature value"));
            }
            values.push(v);
        }
        rows.push(FeatureRow {
            meta,
            segment,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 2, "no feature rows"));
    }
    Ok(FeatureSet { config, rows })
}

fn parse_config_line(path: &Path, line: &str) -> Result<SpectralConfig> {
    let body = line
        .strip_prefix("# ")
        .ok_or_else(|| Error::parse(path, 1, "missing configuration line"))?;
    let mut method = None;
    let mut window_ms = None;
    let mut filter_count = None;
    let mut coeff_count = None;
    let mut sample_rate = None;
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(path, 1, format!("malformed token {token:?}")))?;
        let invalid = || Error::parse(path, 1, format!("invalid {key} value {value:?}"));
        match key {
            "method" => method = Some(value.parse().map_err(|_| invalid())?),
            "window_ms" => window_ms = Some(value.parse().map_err(|_| invalid())?),
            "filter_count" => filter_count = Some(value.parse().map_err(|_| invalid())?),
            "coeff_count" => coeff_count = Some(value.parse().map_err(|_| invalid())?),
            "sample_rate" => sample_rate = Some(value.parse().map_err(|_| invalid())?),
            _ => return Err(Error::parse(path, 1, format!("unknown key {key:?}"))),
        }
    }
    let missing = |what: &str| Error::parse(path, 1, format!("missing {what}"));
    SpectralConfig::new(
        method.ok_or_else(|| missing("method"))?,
        window_ms.ok_or_else(|| missing("window_ms"))?,
        filter_count.ok_or_else(|| missing("filter_count"))?,
        coeff_count.ok_or_else(|| missing("coeff_count"))?,
        sample_rate.ok_or_else(|| missing("sample_rate"))?,
    )
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{test_config, tiny_segmented_corpus, WINDOW_SAMPLES};
    use super::*;

    #[test]
    fn extraction_yields_one_row_per_record_and_segment() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let config = test_config();
        let set = extract_feature_set(&seg, &config, &[SegmentKind::Analysis]).unwrap();
        assert_eq!(set.len(), seg.records.len());
        let expected_dim = config.feature_len(WINDOW_SAMPLES).unwrap();
        for (row, record) in set.rows.iter().zip(&seg.records) {
            assert_eq!(row.meta, *record);
            assert_eq!(row.segment, SegmentKind::Analysis);
            assert_eq!(row.values.len(), expected_dim);
        }
    }

    #[test]
    fn machine_state_set_is_balanced_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let config = test_config();
        let set = machine_state_feature_set(&seg, &config, 7).unwrap();
        assert_eq!(set.len(), 2 * seg.records.len());
        let sanding = set
            .rows
            .iter()
            .filter(|r| r.segment == SegmentKind::Sanding)
            .count();
        let idle = set.len() - sanding;
        assert_eq!(sanding, idle);
        // Same seed, same idle choices; the labeled sets agree exactly.
        let again = machine_state_feature_set(&seg, &config, 7).unwrap();
        let kinds: Vec<_> = set.rows.iter().map(|r| r.segment).collect();
        let kinds_again: Vec<_> = again.rows.iter().map(|r| r.segment).collect();
        assert_eq!(kinds, kinds_again);
    }

    #[test]
    fn split_partitions_by_repetition() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let set = extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let (train, test) = set.split_by_repetition(&[3]).unwrap();
        assert_eq!(train.len() + test.len(), set.len());
        assert!(train.rows.iter().all(|r| r.meta.repetition != 3));
        assert!(test.rows.iter().all(|r| r.meta.repetition == 3));
        assert_eq!(test.len(), set.len() / 3);
        assert!(set.split_by_repetition(&[]).is_err());
        assert!(set.split_by_repetition(&[9]).is_err());
    }

    #[test]
    fn labeled_conversion_and_parameter_augmentation() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let set = extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let plain = set.to_labeled(Task::Wear, false).unwrap();
        let augmented = set.to_labeled(Task::Wear, true).unwrap();
        assert_eq!(augmented.feature_dim(), plain.feature_dim() + 3);
        for (row, features) in set.rows.iter().zip(augmented.features()) {
            let tail = &features[plain.feature_dim()..];
            assert_eq!(tail[0], row.meta.feed_speed as f64);
            assert_eq!(tail[1], row.meta.grit_size as f64);
            assert_eq!(tail[2], row.meta.material.as_f64());
        }
        assert_eq!(
            plain.labels(),
            set.rows
                .iter()
                .map(|r| r.meta.wear_level as usize)
                .collect::<Vec<_>>()
                .as_slice()
        );
        let feed = set.to_labeled(Task::FeedSpeed, false).unwrap();
        assert!(feed.labels().iter().all(|&l| l < 3));
    }

    #[test]
    fn feature_csv_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let set = extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let path = dir.path().join("features.csv");
        write_features_csv(&set, &path).unwrap();
        let loaded = load_features_csv(&path).unwrap();
        assert_eq!(loaded.config, set.config);
        assert_eq!(loaded.rows.len(), set.rows.len());
        for (a, b) in loaded.rows.iter().zip(&set.rows) {
            assert_eq!(a.meta, b.meta);
            assert_eq!(a.segment, b.segment);
            assert_eq!(a.values.len(), b.values.len());
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn malformed_feature_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let seg = tiny_segmented_corpus(dir.path());
        let set = extract_feature_set(&seg, &test_config(), &[SegmentKind::Analysis]).unwrap();
        let path = dir.path().join("features.csv");
        write_features_csv(&set, &path).unwrap();
        let good = std::fs::read_to_string(&path).unwrap();

        std::fs::write(&path, good.replacen("# method=mfcc", "# method=opus", 1)).unwrap();
        assert!(matches!(load_features_csv(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, good.replacen("clip_path,wear", "path,wear", 1)).unwrap();
        assert!(matches!(load_features_csv(&path), Err(Error::Parse { .. })));

        let mut lines: Vec<&str> = good.lines().collect();
        let truncated = format!("{},999", lines[2]);
        lines[2] = &truncated;
        std::fs::write(&path, lines.join("\n")).unwrap();
        assert!(matches!(load_features_csv(&path), Err(Error::Parse { .. })));
    }
}
