//! Command-line conventions: exit codes, error prefixes, and the
//! segmentation quality gate, exercised on small hand-built inputs.
//!
//! Exit codes: 0 success, 2 missing or malformed data, 3 segmentation
//! quality below the reject limit, 4 usage or configuration errors.

use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use beltwear::dataset::{write_manifest, write_wav, Material, Position, SandingRecordMeta};
use beltwear::AudioClip;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_beltwear")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn beltwear")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_exits_zero_and_lists_commands() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for command in ["synth", "segment", "features", "train", "eval", "grid", "specialized", "table", "pca"] {
        assert!(text.contains(command), "help does not mention {command}");
    }
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["synth", "--bogus"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn invalid_task_name_is_a_usage_error() {
    let out = run(&["eval", "--data", "x", "--out", "y", "--task", "sharpness"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_text(&out).contains("sharpness"));
}

#[test]
fn invalid_feature_name_is_a_usage_error() {
    let out = run(&["eval", "--data", "x", "--out", "y", "--feature", "wavelet"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_data_directory_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let out = run(&[
        "eval",
        "--data",
        missing.to_str().unwrap(),
        "--out",
        dir.path().join("report").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_text(&out).starts_with("error: "));
}

#[test]
fn garbage_thread_cap_is_a_configuration_error() {
    for value in ["abc", "0"] {
        let out = Command::new(bin())
            .args(["synth", "--out", "unused"])
            .env("BELTWEAR_THREADS", value)
            .output()
            .expect("spawn beltwear");
        assert_eq!(out.status.code(), Some(4), "BELTWEAR_THREADS={value}");
        assert!(stderr_text(&out).starts_with("error: "));
    }
}

/// Two clips of stationary noise with no sanding event in them. The
/// detector must reject both, tripping the quality gate.
fn event_free_corpus(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1af);
    let mut records = Vec::new();
    for repetition in [1u8, 2] {
        let clip_path = format!("wavs/quiet_r{repetition}.wav");
        let samples: Vec<f64> = (0..6 * 44_100)
            .map(|_| 0.002 * rng.random_range(-1.0..1.0f64))
            .collect();
        let clip = AudioClip { samples, sample_rate: 44_100 };
        write_wav(&dir.join(&clip_path), &clip).unwrap();
        records.push(SandingRecordMeta {
            wear_level: 0,
            feed_speed: 10,
            grit_size: 80,
            material: Material::Soft,
            position: Position::Center,
            repetition,
            clip_path,
        });
    }
    write_manifest(&dir.join("manifest.csv"), &records).unwrap();
}

#[test]
fn event_free_audio_trips_the_quality_gate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    event_free_corpus(&corpus);
    let out = run(&[
        "segment",
        "--data",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("seg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_text(&out);
    assert!(err.starts_with("error: "), "stderr was {err:?}");
}

#[test]
fn truth_markers_without_a_sidecar_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    event_free_corpus(&corpus);
    let out = run(&[
        "segment",
        "--data",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("seg").to_str().unwrap(),
        "--markers",
        "truth",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
