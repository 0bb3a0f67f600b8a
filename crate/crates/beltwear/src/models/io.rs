//! Versioned text serialization for trained models.
//!
//! Layout: a header line `beltwear-model v1 <kind> dim=<d> classes=<C>`
//! followed by a kind-specific body. Floats use shortest-roundtrip
//! formatting, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::forest::RandomForest;
use super::knn::KnnClassifier;
use super::mlp::MlpClassifier;
use super::random::RandomClassifier;
use super::tree::{DecisionTree, Node};
use super::{ModelKind, TrainedModel};
use crate::error::{Error, Result};
use crate::util::{fmt_f64, write_atomic};

const MAGIC: &str = "beltwear-model";
const VERSION: &str = "v1";

pub(super) fn save(model: &TrainedModel, path: &Path) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{MAGIC} {VERSION} {} dim={} classes={}",
        model.kind(),
        model.feature_dim(),
        model.class_count()
    );
    match model {
        TrainedModel::Tree(m) => write_tree(&mut text, m),
        TrainedModel::Forest(m) => {
            let _ = writeln!(text, "trees={}", m.trees.len());
            for tree in &m.trees {
                write_tree(&mut text, tree);
            }
        }
        TrainedModel::Knn(m) => write_knn(&mut text, m),
        TrainedModel::Mlp(m) => write_mlp(&mut text, m),
        TrainedModel::Random(m) => {
            let _ = writeln!(text, "seed={}", m.seed);
            write_usize_line(&mut text, "counts", &m.class_counts);
        }
    }
    write_atomic(path, text.as_bytes())
}

pub(super) fn load(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = Reader {
        lines: text.lines().collect(),
        at: 0,
        path,
    };

    let header = reader.next_line()?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&MAGIC) {
        return Err(reader.error("not a model file"));
    }
    if tokens.get(1) != Some(&VERSION) {
        return Err(Error::ModelVersion {
            path: path.to_path_buf(),
            found: tokens.get(1).unwrap_or(&"").to_string(),
            expected: VERSION.to_string(),
        });
    }
    if tokens.len() != 5 {
        return Err(reader.error("malformed header"));
    }
    let kind: ModelKind = tokens[2]
        .parse()
        .map_err(|_| reader.error("unknown model kind"))?;
    let dim = parse_kv(&reader, tokens[3], "dim")?;
    let classes = parse_kv(&reader, tokens[4], "classes")?;
    if dim == 0 || classes == 0 {
        return Err(reader.error("dim and classes must be positive"));
    }

    let model = match kind {
        ModelKind::Tree => TrainedModel::Tree(read_tree(&mut reader, dim, classes)?),
        ModelKind::Forest => {
            let count = reader.expect_kv("trees")?;
            if count == 0 {
                return Err(reader.error("a forest needs at least one tree"));
            }
            let mut trees = Vec::with_capacity(count);
            for _ in 0..count {
                trees.push(read_tree(&mut reader, dim, classes)?);
            }
            TrainedModel::Forest(RandomForest {
                trees,
                feature_dim: dim,
                class_count: classes,
            })
        }
        ModelKind::Knn => TrainedModel::Knn(read_knn(&mut reader, dim, classes)?),
        ModelKind::Mlp => TrainedModel::Mlp(read_mlp(&mut reader, dim, classes)?),
        ModelKind::Random => {
            let seed = reader.expect_kv_u64("seed")?;
            let counts = reader.expect_usize_line("counts", classes)?;
            if counts.iter().sum::<usize>() == 0 {
                return Err(reader.error("class counts sum to zero"));
            }
            TrainedModel::Random(RandomClassifier {
                class_counts: counts,
                seed,
                feature_dim: dim,
            })
        }
    };
    reader.expect_end()?;
    Ok(model)
}

/// Parse a `key=<n>` token from the header line.
fn parse_kv(reader: &Reader, token: &str, key: &str) -> Result<usize> {
    let value = token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| reader.error(&format!("expected {key}=<n> in header, got {token:?}")))?;
    value
        .parse()
        .map_err(|_| reader.error(&format!("invalid {key} value {value:?}")))
}

fn write_tree(text: &mut String, tree: &DecisionTree) {
    let _ = writeln!(text, "nodes={}", tree.nodes.len());
    for node in &tree.nodes {
        match node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(text, "split {feature} {} {left} {right}", fmt_f64(*threshold));
            }
            Node::Leaf { class } => {
                let _ = writeln!(text, "leaf {class}");
            }
        }
    }
}

fn read_tree(reader: &mut Reader, dim: usize, classes: usize) -> Result<DecisionTree> {
    let count = reader.expect_kv("nodes")?;
    if count == 0 {
        return Err(reader.error("a tree needs at least one node"));
    }
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let line = reader.next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let node = match tokens.as_slice() {
            ["split", feature, threshold, left, right] => Node::Split {
                feature: reader.parse_field(feature, "feature")?,
                threshold: reader.parse_f64(threshold, "threshold")?,
                left: reader.parse_field(left, "left child")?,
                right: reader.parse_field(right, "right child")?,
            },
            ["leaf", class] => Node::Leaf {
                class: reader.parse_field(class, "class")?,
            },
            _ => return Err(reader.error("expected a split or leaf line")),
        };
        match &node {
            Node::Split {
                feature,
                left,
                right,
                ..
            } => {
                if *feature >= dim {
                    return Err(reader.error("split feature out of range"));
                }
                if *left >= count || *right >= count {
                    return Err(reader.error("child index out of range"));
                }
            }
            Node::Leaf { class } => {
                if *class >= classes {
                    return Err(reader.error("leaf class out of range"));
                }
            }
        }
        nodes.push(node);
    }
    Ok(DecisionTree {
        nodes,
        feature_dim: dim,
        class_count: classes,
    })
}

fn write_knn(text: &mut String, m: &KnnClassifier) {
    let _ = writeln!(text, "k={}", m.k);
    let _ = writeln!(text, "points={}", m.points.len());
    write_f64_line(text, "mean", &m.mean);
    write_f64_line(text, "std", &m.std);
    for (point, label) in m.points.iter().zip(&m.labels) {
        let _ = write!(text, "point {label}");
        for v in point {
            let _ = write!(text, " {}", fmt_f64(*v));
        }
        text.push('\n');
    }
}

fn read_knn(reader: &mut Reader, dim: usize, classes: usize) -> Result<KnnClassifier> {
    let k = reader.expect_kv("k")?;
    let n = reader.expect_kv("points")?;
    if k == 0 || k > n {
        return Err(reader.error("k must be within 1..=points"));
    }
    let mean = reader.expect_f64_line("mean", dim)?;
    let std = reader.expect_f64_line("std", dim)?;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let line = reader.next_line()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("point") {
            return Err(reader.error("expected a point line"));
        }
        let label: usize = reader.parse_field(
            tokens.next().ok_or_else(|| reader.error("missing label"))?,
            "label",
        )?;
        if label >= classes {
            return Err(reader.error("point label out of range"));
        }
        let values = reader.parse_f64_list(tokens, dim)?;
        points.push(values);
        labels.push(label);
    }
    Ok(KnnClassifier {
        k,
        mean,
        std,
        points,
        labels,
        class_count: classes,
    })
}

fn write_mlp(text: &mut String, m: &MlpClassifier) {
    write_usize_line(text, "layers", &m.layer_sizes);
    write_f64_line(text, "mean", &m.mean);
    write_f64_line(text, "std", &m.std);
    for (w, b) in m.weights.iter().zip(&m.biases) {
        write_f64_line(text, "weights", w);
        write_f64_line(text, "biases", b);
    }
}

fn read_mlp(reader: &mut Reader, dim: usize, classes: usize) -> Result<MlpClassifier> {
    let line = reader.next_line()?;
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("layers") {
        return Err(reader.error("expected a layers line"));
    }
    let mut layer_sizes = Vec::new();
    for t in tokens {
        layer_sizes.push(reader.parse_field::<usize>(t, "layer size")?);
    }
    if layer_sizes.len() < 2 {
        return Err(reader.error("need at least input and output layers"));
    }
    if layer_sizes.first() != Some(&dim) || layer_sizes.last() != Some(&classes) {
        return Err(reader.error("layer sizes disagree with the header"));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(reader.error("layer sizes must be positive"));
    }
    let mean = reader.expect_f64_line("mean", dim)?;
    let std = reader.expect_f64_line("std", dim)?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in layer_sizes.windows(2) {
        weights.push(reader.expect_f64_line("weights", pair[0] * pair[1])?);
        biases.push(reader.expect_f64_line("biases", pair[1])?);
    }
    Ok(MlpClassifier {
        layer_sizes,
        weights,
        biases,
        mean,
        std,
    })
}

fn write_f64_line(text: &mut String, name: &str, values: &[f64]) {
    let _ = write!(text, "{name}");
    for v in values {
        let _ = write!(text, " {}", fmt_f64(*v));
    }
    text.push('\n');
}

fn write_usize_line(text: &mut String, name: &str, values: &[usize]) {
    let _ = write!(text, "{name}");
    for v in values {
        let _ = write!(text, " {v}");
    }
    text.push('\n');
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        while let Some(&line) = self.lines.get(self.at) {
            self.at += 1;
            if !line.trim().is_empty() {
                return Ok(line);
            }
        }
        self.at = self.lines.len() + 1;
        Err(Error::parse(self.path, self.at, "unexpected end of file"))
    }

    /// Error at the line most recently returned by `next_line`.
    fn error(&self, message: &str) -> Error {
        Error::parse(self.path, self.at.max(1), message)
    }

    fn parse_field<T: std::str::FromStr>(&self, token: &str, what: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.error(&format!("invalid {what} {token:?}")))
    }

    fn parse_f64(&self, token: &str, what: &str) -> Result<f64> {
        let v: f64 = self.parse_field(token, what)?;
        if !v.is_finite() {
            return Err(self.error(&format!("{what} must be finite")));
        }
        Ok(v)
    }

    fn parse_f64_list<'t>(
        &self,
        tokens: impl Iterator<Item = &'t str>,
        expected: usize,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(expected);
        for t in tokens {
            out.push(self.parse_f64(t, "value")?);
        }
        if out.len() != expected {
            return Err(self.error(&format!("expected {expected} values, got {}", out.len())));
        }
        Ok(out)
    }

    fn expect_kv(&mut self, key: &str) -> Result<usize> {
        let line = self.next_line()?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| self.error(&format!("expected {key}=<count>")))?;
        if k != key {
            return Err(self.error(&format!("expected {key}=<count>, got {k:?}")));
        }
        self.parse_field(v, key)
    }

    fn expect_kv_u64(&mut self, key: &str) -> Result<u64> {
        let line = self.next_line()?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| self.error(&format!("expected {key}=<value>")))?;
        if k != key {
            return Err(self.error(&format!("expected {key}=<value>, got {k:?}")));
        }
        self.parse_field(v, key)
    }

    fn expect_f64_line(&mut self, name: &str, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(name) {
            return Err(self.error(&format!("expected a {name} line")));
        }
        self.parse_f64_list(tokens, expected)
    }

    fn expect_usize_line(&mut self, name: &str, expected: usize) -> Result<Vec<usize>> {
        let line = self.next_line()?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(name) {
            return Err(self.error(&format!("expected a {name} line")));
        }
        let mut out = Vec::with_capacity(expected);
        for t in tokens {
            out.push(self.parse_field(t, "count")?);
        }
        if out.len() != expected {
            return Err(self.error(&format!("expected {expected} counts, got {}", out.len())));
        }
        Ok(out)
    }

    fn expect_end(&mut self) -> Result<()> {
        if self.next_line().is_ok() {
            return Err(self.error("trailing content after the model body"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{
        train_model, LabeledSet, ModelKind, ModelParams, TrainedModel,
    };
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn training_set() -> LabeledSet {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..3usize {
            for _ in 0..15 {
                let centre = class as f64 * 4.0;
                features.push(vec![
                    centre + rng.random_range(-1.0..1.0),
                    -centre + rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
                labels.push(class);
            }
        }
        LabeledSet::new(features, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn probes() -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
        (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..10.0)).collect())
            .collect()
    }

    #[test]
    fn every_model_kind_round_trips() {
        let data = training_set();
        let dir = tempfile::tempdir().unwrap();
        let params = ModelParams {
            forest_trees: 5,
            mlp_epochs: 5,
            mlp_hidden: vec![6],
            ..ModelParams::default()
        };
        for kind in ModelKind::ALL {
            let model = train_model(kind, &data, &params, 11).unwrap();
            let path = dir.path().join(format!("{kind}.bw"));
            model.save(&path).unwrap();
            let loaded = TrainedModel::load(&path).unwrap();
            assert_eq!(loaded.kind(), kind);
            assert_eq!(loaded.feature_dim(), model.feature_dim());
            assert_eq!(loaded.class_count(), model.class_count());
            for probe in probes() {
                assert_eq!(
                    loaded.predict_one(&probe).unwrap(),
                    model.predict_one(&probe).unwrap(),
                    "{kind} prediction changed after a round trip"
                );
            }
        }
    }

    #[test]
    fn saved_files_are_byte_stable() {
        let data = training_set();
        let dir = tempfile::tempdir().unwrap();
        let model = train_model(ModelKind::Forest, &data, &ModelParams::default(), 3).unwrap();
        let a = dir.path().join("a.bw");
        let b = dir.path().join("b.bw");
        model.save(&a).unwrap();
        model.save(&b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn future_version_is_rejected_with_the_found_version() {
        let data = training_set();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bw");
        let model = train_model(ModelKind::Tree, &data, &ModelParams::default(), 0).unwrap();
        model.save(&path).unwrap();
        let bumped = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("beltwear-model v1", "beltwear-model v2", 1);
        std::fs::write(&path, bumped).unwrap();
        match TrainedModel::load(&path) {
            Err(Error::ModelVersion { found, expected, .. }) => {
                assert_eq!(found, "v2");
                assert_eq!(expected, "v1");
            }
            other => panic!("expected a version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_and_corrupt_files_are_parse_errors() {
        let data = training_set();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bw");
        let model = train_model(ModelKind::Knn, &data, &ModelParams::default(), 0).unwrap();
        model.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let cut: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, "something-else v1 knn dim=3 classes=3\n").unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Parse { .. })));

        let garbled = text.replacen("point 0", "point nine", 1);
        std::fs::write(&path, garbled).unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn out_of_range_indices_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bw");
        // Child index 9 does not exist in a 3 node arena.
        std::fs::write(
            &path,
            "beltwear-model v1 tree dim=2 classes=2\nnodes=3\nsplit 0 0.5 1 9\nleaf 0\nleaf 1\n",
        )
        .unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Parse { .. })));
        // Split feature 7 exceeds dim=2.
        std::fs::write(
            &path,
            "beltwear-model v1 tree dim=2 classes=2\nnodes=3\nsplit 7 0.5 1 2\nleaf 0\nleaf 1\n",
        )
        .unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Parse { .. })));
        // Leaf class 5 exceeds classes=2.
        std::fs::write(&path, "beltwear-model v1 tree dim=2 classes=2\nnodes=1\nleaf 5\n").unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Parse { .. })));
    }
}
