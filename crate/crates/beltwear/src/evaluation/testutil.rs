//! Miniature segmented corpora for the evaluation tests. Windows are pure
//! tones whose frequency encodes the labels, so models have something to
//! learn without full synthesis.

use std::path::Path;

use crate::dataset::{
    write_manifest, write_wav, AudioClip, Material, Position, SandingRecordMeta, FEED_SPEEDS,
    GRIT_SIZES, REPETITIONS,
};
use crate::dsp::{FeatureMethod, SpectralConfig};
use crate::segmentation::{SegmentKind, SegmentedCorpus};

pub(crate) const TEST_SR: u32 = 44_100;
/// Long enough for one 128 ms frame, so every grid window length works.
pub(crate) const WINDOW_SAMPLES: usize = 6000;

pub(crate) fn test_config() -> SpectralConfig {
    SpectralConfig::new(FeatureMethod::Mfcc, 32, 32, 20, TEST_SR).unwrap()
}

/// 12 records: wear {0, 1} x feed {10, 14} x 3 repetitions.
pub(crate) fn tiny_segmented_corpus(dir: &Path) -> SegmentedCorpus {
    let mut records = Vec::new();
    for wear in [0u8, 1] {
        for (feed, position) in [(10u16, Position::Left), (14, Position::Center)] {
            for rep in REPETITIONS {
                records.push(SandingRecordMeta {
                    wear_level: wear,
                    feed_speed: feed,
                    grit_size: 80,
                    material: if wear == 0 {
                        Material::Soft
                    } else {
                        Material::Hard
                    },
                    position,
                    repetition: rep,
                    clip_path: format!("wavs/w{wear}_f{feed}_r{rep}.wav"),
                });
            }
        }
    }
    build_corpus(dir, records)
}

/// 54 records covering all 18 parameter configurations (wear 0 only).
pub(crate) fn config_complete_corpus(dir: &Path) -> SegmentedCorpus {
    let mut records = Vec::new();
    for feed in FEED_SPEEDS {
        for grit in GRIT_SIZES {
            for material in Material::ALL {
                for rep in REPETITIONS {
                    records.push(SandingRecordMeta {
                        wear_level: 0,
                        feed_speed: feed,
                        grit_size: grit,
                        material,
                        position: Position::Left,
                        repetition: rep,
                        clip_path: format!("wavs/f{feed}_g{grit}_{material}_r{rep}.wav"),
                    });
                }
            }
        }
    }
    build_corpus(dir, records)
}

fn build_corpus(dir: &Path, records: Vec<SandingRecordMeta>) -> SegmentedCorpus {
    write_manifest(&dir.join("manifest.csv"), &records).unwrap();
    let seg = SegmentedCorpus {
        dir: dir.to_path_buf(),
        records,
    };
    for r in &seg.records {
        for kind in [
            SegmentKind::Analysis,
            SegmentKind::Sanding,
            SegmentKind::PreIdle,
            SegmentKind::PostIdle,
        ] {
            // Idle windows sit far above sanding windows; within a band the
            // labels shift the tone and the repetition nudges it slightly.
            let base = match kind {
                SegmentKind::Analysis | SegmentKind::Sanding => 500.0,
                SegmentKind::PreIdle | SegmentKind::PostIdle => 5000.0,
            };
            let freq = base
                + 400.0 * r.wear_level as f64
                + 10.0 * r.feed_speed as f64
                + r.grit_size as f64
                + 17.0 * r.material.as_f64()
                + 2.0 * r.repetition as f64;
            let samples: Vec<f64> = (0..WINDOW_SAMPLES)
                .map(|t| 0.2 * (2.0 * std::f64::consts::PI * freq * t as f64 / TEST_SR as f64).sin())
                .collect();
            let clip = AudioClip {
                samples,
                sample_rate: TEST_SR,
            };
            write_wav(&seg.window_path(r, kind), &clip).unwrap();
        }
    }
    seg
}
