//! Corpus metadata, audio containers, and file formats.
//!
//! A corpus is a directory with a `manifest.csv` naming every recording and
//! its process labels, the WAV files themselves, and (for synthetic corpora)
//! an `onsets.csv` sidecar holding ground-truth sanding onset times.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::util::{fmt_f64, write_atomic};

pub mod synth;
pub mod wav;

pub use synth::{synthesize_corpus, SynthConfig};
pub use wav::{load_wav, write_wav};

/// Workpiece hardness class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Material {
    Soft,
    Hard,
}

impl Material {
    pub const ALL: [Material; 2] = [Material::Soft, Material::Hard];

    /// Numeric encoding used when process parameters are appended to
    /// feature vectors: soft 0, hard 1.
    pub fn as_f64(self) -> f64 {
        match self {
            Material::Soft => 0.0,
            Material::Hard => 1.0,
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Material::Soft => "soft",
            Material::Hard => "hard",
        })
    }
}

impl FromStr for Material {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(Material::Soft),
            "hard" => Ok(Material::Hard),
            other => Err(Error::Domain(format!(
                "unknown material {other:?} (expected soft or hard)"
            ))),
        }
    }
}

/// Microphone placement across the belt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Left,
    Center,
    Right,
}

impl Position {
    pub const ALL: [Position; 3] = [Position::Left, Position::Center, Position::Right];
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Position::Left => "left",
            Position::Center => "center",
            Position::Right => "right",
        })
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Position::Left),
            "center" => Ok(Position::Center),
            "right" => Ok(Position::Right),
            other => Err(Error::Domain(format!(
                "unknown position {other:?} (expected left, center, right)"
            ))),
        }
    }
}

/// Belt wear grades, new to worn out.
pub const WEAR_LEVELS: [u8; 5] = [0, 1, 2, 3, 4];
/// Feed speeds in m/min.
pub const FEED_SPEEDS: [u16; 3] = [10, 14, 18];
/// Abrasive grit sizes.
pub const GRIT_SIZES: [u16; 3] = [80, 150, 240];
/// Recording repetitions per condition.
pub const REPETITIONS: [u8; 3] = [1, 2, 3];

/// One recording's labels: the full experimental condition plus the path of
/// its audio file relative to the corpus directory.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SandingRecordMeta {
    pub wear_level: u8,
    pub feed_speed: u16,
    pub grit_size: u16,
    pub material: Material,
    pub position: Position,
    pub repetition: u8,
    pub clip_path: String,
}

impl SandingRecordMeta {
    /// Check every field against its allowed domain.
    pub fn validate(&self) -> Result<()> {
        if !WEAR_LEVELS.contains(&self.wear_level) {
            return Err(Error::Domain(format!(
                "wear level {} not in {WEAR_LEVELS:?}",
                self.wear_level
            )));
        }
        if !FEED_SPEEDS.contains(&self.feed_speed) {
            return Err(Error::Domain(format!(
                "feed speed {} not in {FEED_SPEEDS:?}",
                self.feed_speed
            )));
        }
        if !GRIT_SIZES.contains(&self.grit_size) {
            return Err(Error::Domain(format!(
                "grit size {} not in {GRIT_SIZES:?}",
                self.grit_size
            )));
        }
        if !REPETITIONS.contains(&self.repetition) {
            return Err(Error::Domain(format!(
                "repetition {} not in {REPETITIONS:?}",
                self.repetition
            )));
        }
        if self.clip_path.is_empty() {
            return Err(Error::Domain("empty clip path".into()));
        }
        Ok(())
    }

    /// The experimental condition without the path, used for uniqueness.
    pub fn condition_key(&self) -> (u8, u16, u16, Material, Position, u8) {
        (
            self.wear_level,
            self.feed_speed,
            self.grit_size,
            self.material,
            self.position,
            self.repetition,
        )
    }

    /// The machine-parameter slice this record belongs to.
    pub fn parameter_configuration(&self) -> ParameterConfiguration {
        ParameterConfiguration {
            feed_speed: self.feed_speed,
            grit_size: self.grit_size,
            material: self.material,
        }
    }
}

/// One of the 18 machine parameter settings (feed x grit x material).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParameterConfiguration {
    pub feed_speed: u16,
    pub grit_size: u16,
    pub material: Material,
}

impl ParameterConfiguration {
    /// All 18 settings, in feed-major, then grit, then material order.
    pub fn all() -> Vec<ParameterConfiguration> {
        let mut out = Vec::with_capacity(18);
        for feed in FEED_SPEEDS {
            for grit in GRIT_SIZES {
                for material in Material::ALL {
                    out.push(ParameterConfiguration {
                        feed_speed: feed,
                        grit_size: grit,
                        material,
                    });
                }
            }
        }
        out
    }
}

impl fmt::Display for ParameterConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}_g{}_{}", self.feed_speed, self.grit_size, self.material)
    }
}

/// Mono audio in `[-1, 1]` at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub const MANIFEST_HEADER: &str = "clip_path,wear,feed,grit,material,position,repetition";
pub const ONSETS_HEADER: &str = "clip_path,onset_seconds";

fn parse_field<T: FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| Error::parse(path, line, format!("bad {name} {raw:?}: {e}")))
}

/// Read a corpus manifest. Records come back in file order; duplicate
/// experimental conditions and malformed rows are errors that name the line.
pub fn load_manifest(path: &Path) -> Result<Vec<SandingRecordMeta>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == MANIFEST_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("bad header {header:?} (expected {MANIFEST_HEADER:?})"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty manifest")),
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let record = SandingRecordMeta {
            clip_path: fields[0].to_string(),
            wear_level: parse_field(path, line_no, "wear level", fields[1])?,
            feed_speed: parse_field(path, line_no, "feed speed", fields[2])?,
            grit_size: parse_field(path, line_no, "grit size", fields[3])?,
            material: fields[4]
                .parse()
                .map_err(|e| Error::parse(path, line_no, format!("{e}")))?,
            position: fields[5]
                .parse()
                .map_err(|e| Error::parse(path, line_no, format!("{e}")))?,
            repetition: parse_field(path, line_no, "repetition", fields[6])?,
        };
        record
            .validate()
            .map_err(|e| Error::parse(path, line_no, format!("{e}")))?;
        if !seen.insert(record.condition_key()) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate condition {:?}", record.condition_key()),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

/// Write a manifest in the canonical column order.
pub fn write_manifest(path: &Path, records: &[SandingRecordMeta]) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.clip_path, r.wear_level, r.feed_speed, r.grit_size, r.material, r.position,
            r.repetition
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Read the ground-truth onset sidecar: `(clip_path, onset_seconds)` rows.
pub fn load_onsets(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == ONSETS_HEADER => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("bad header {header:?} (expected {ONSETS_HEADER:?})"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty onset file")),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end();
        if row.is_empty() {
            continue;
        }
        let (clip, onset) = row.split_once(',').ok_or_else(|| {
            Error::parse(path, line_no, "expected clip_path,onset_seconds")
        })?;
        let onset: f64 = parse_field(path, line_no, "onset", onset)?;
        if !onset.is_finite() || onset < 0.0 {
            return Err(Error::parse(path, line_no, format!("bad onset {onset}")));
        }
        out.push((clip.to_string(), onset));
    }
    Ok(out)
}

/// Write the onset sidecar.
pub fn write_onsets(path: &Path, onsets: &[(String, f64)]) -> Result<()> {
    let mut out = String::with_capacity(32 * (onsets.len() + 1));
    out.push_str(ONSETS_HEADER);
    out.push('\n');
    for (clip, onset) in onsets {
        out.push_str(clip);
        out.push(',');
        out.push_str(&fmt_f64(*onset));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// A corpus directory opened for reading: the manifest plus path resolution.
pub struct Corpus {
    pub dir: PathBuf,
    pub records: Vec<SandingRecordMeta>,
}

impl Corpus {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let records = load_manifest(&dir.join("manifest.csv"))?;
        Ok(Corpus { dir, records })
    }

    /// Absolute path of a record's audio file.
    pub fn clip_path(&self, record: &SandingRecordMeta) -> PathBuf {
        self.dir.join(&record.clip_path)
    }

    pub fn load_clip(&self, record: &SandingRecordMeta) -> Result<AudioClip> {
        load_wav(&self.clip_path(record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> SandingRecordMeta {
        SandingRecordMeta {
            wear_level: 2,
            feed_speed: 14,
            grit_size: 150,
            material: Material::Hard,
            position: Position::Center,
            repetition: 3,
            clip_path: "wavs/example.wav".into(),
        }
    }

    #[test]
    fn validate_accepts_domain_values_and_rejects_others() {
        let good = sample_record();
        good.validate().unwrap();
        for (mutate, _) in [
            (SandingRecordMeta { wear_level: 5, ..good.clone() }, "wear"),
            (SandingRecordMeta { feed_speed: 12, ..good.clone() }, "feed"),
            (SandingRecordMeta { grit_size: 100, ..good.clone() }, "grit"),
            (SandingRecordMeta { repetition: 0, ..good.clone() }, "rep"),
            (SandingRecordMeta { clip_path: String::new(), ..good.clone() }, "path"),
        ] {
            assert!(mutate.validate().is_err(), "{mutate:?}");
        }
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let mut records = vec![sample_record()];
        records.push(SandingRecordMeta {
            repetition: 1,
            clip_path: "wavs/other.wav".into(),
            ..sample_record()
        });
        write_manifest(&path, &records).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn manifest_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let text = format!("{MANIFEST_HEADER}\nwavs/a.wav,0,10,80,soft,left,1\nwavs/b.wav,9,10,80,soft,left,1\n");
        std::fs::write(&path, text).unwrap();
        match load_manifest(&path).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("wear level"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn manifest_rejects_wrong_field_count_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "clip,wear\n").unwrap();
        assert!(matches!(
            load_manifest(&path).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        let text = format!("{MANIFEST_HEADER}\nwavs/a.wav,0,10,80,soft,left\n");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_manifest(&path).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn manifest_rejects_duplicate_conditions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let text = format!(
            "{MANIFEST_HEADER}\nwavs/a.wav,0,10,80,soft,left,1\nwavs/b.wav,0,10,80,soft,left,1\n"
        );
        std::fs::write(&path, text).unwrap();
        match load_manifest(&path).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parameter_configurations_cover_the_full_grid() {
        let all = ParameterConfiguration::all();
        assert_eq!(all.len(), 18);
        let unique: HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), 18);
    }

    #[test]
    fn onsets_round_trip_at_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("onsets.csv");
        let rows = vec![
            ("wavs/a.wav".to_string(), 1.2345678901234567),
            ("wavs/b.wav".to_string(), 58212.0 / 44100.0),
        ];
        write_onsets(&path, &rows).unwrap();
        let back = load_onsets(&path).unwrap();
        assert_eq!(back.len(), 2);
        for ((c0, o0), (c1, o1)) in rows.iter().zip(&back) {
            assert_eq!(c0, c1);
            assert_eq!(o0.to_bits(), o1.to_bits());
        }
    }
}
