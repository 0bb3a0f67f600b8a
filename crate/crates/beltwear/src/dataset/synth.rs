//! Deterministic synthetic sanding recordings.
//!
//! Real shop-floor audio is proprietary, so the corpus is generated. Each
//! clip mimics the structure of a wide-belt sander recording:
//!
//! * a machine baseline running the whole clip: mains hum, dust-extraction
//!   tones, and broadband sensor noise;
//! * one sanding event of fixed length with a randomized onset, made of a
//!   harmonic stack (fundamental set by feed speed, spectral tilt set by
//!   grit) plus broadband contact noise whose level doubles per wear grade;
//! * raised-cosine edges so the event starts and stops without clicks.
//!
//! Process labels map to acoustics so that every classification task in the
//! pipeline has a learnable signal: wear sets the noise floor above the
//! harmonic stack, feed sets the fundamental, grit sets the harmonic decay,
//! and material scales the contact noise. That material gain sits between
//! the per-clip level jitter and the factor-two wear spacing, so wear read
//! across mixed materials has genuinely ambiguous borderline clips while
//! wear read within one machine configuration stays cleanly separated. This
//! is the regime the pipeline is built to expose: specialists trained per
//! configuration beat one generalist trained across all of them.
//!
//! Everything derives from one corpus seed; clip `i` uses stream
//! `seed XOR i`, so any clip can be regenerated in isolation and the corpus
//! is byte-identical across reruns and thread counts.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    write_manifest, write_onsets, write_wav, AudioClip, Material, ParameterConfiguration, Position,
    SandingRecordMeta, FEED_SPEEDS, GRIT_SIZES, WEAR_LEVELS,
};
use crate::dsp::fft::RealFft;
use crate::error::{Error, Result};

/// Master amplitude of the harmonic stack.
const STACK_AMPLITUDE: f64 = 0.12;
/// Uniform run-to-run amplitude jitter applied to the stack.
const AMPLITUDE_JITTER: (f64, f64) = (0.90, 1.10);
/// Level gain for hard workpieces. Much smaller than the jitter above, so
/// material stays a weak, overlapping cue.
const HARD_MATERIAL_GAIN: f64 = 1.03;
/// Always-on tonal baseline: mains hum harmonics and dust-extraction fans,
/// as `(hz, amplitude)` pairs.
const BASELINE_TONES: [(f64, f64); 5] = [
    (50.0, 0.015),
    (100.0, 0.010),
    (150.0, 0.006),
    (75.0, 0.008),
    (225.0, 0.005),
];
/// Broadband sensor/room noise, always on.
const BASELINE_NOISE_SIGMA: f64 = 0.0025;
/// Contact noise level at wear grade 0; each grade doubles it.
const WEAR_NOISE_BASE_SIGMA: f64 = 0.0045;
/// Uniform jitter on the contact noise level.
const WEAR_NOISE_JITTER: (f64, f64) = (0.80, 1.25);
/// Contact noise gain for hard workpieces. Harder stock sands louder at the
/// same belt state, so wear levels interleave across materials: a model that
/// cannot condition on material reads a hard workpiece as roughly half a
/// grade more worn, while per-configuration specialists keep the full
/// factor-two spacing between grades.
const HARD_CONTACT_NOISE_GAIN: f64 = 1.38;
/// Harmonics in the stack, capped below 45% of the sample rate.
const MAX_HARMONICS: usize = 25;
/// Fixed sanding event length in seconds.
pub const EVENT_SECONDS: f64 = 3.3;
/// Earliest and latest possible event onset in seconds.
const ONSET_RANGE_S: (f64, f64) = (1.10, 1.45);
/// Raised-cosine edge length at event start and stop.
const EVENT_EDGE_S: f64 = 0.02;

/// Separation the corpus must exhibit between wear classes: band-profile
/// means at least this many within-class standard deviations apart.
const MIN_SEPARABILITY_RATIO: f64 = 3.0;
/// Band count of the wear separability profile.
const PROFILE_BANDS: usize = 8;
/// Transform length used to measure the profile.
const PROFILE_FFT: usize = 32768;

/// Fundamental frequency of the harmonic stack for a feed speed.
fn fundamental_hz(feed_speed: u16) -> f64 {
    match feed_speed {
        10 => 180.0,
        14 => 260.0,
        18 => 340.0,
        other => 100.0 + 10.0 * other as f64,
    }
}

/// Spectral tilt of the stack for a grit size: harmonic `h` is scaled by
/// `h^-tilt`, so coarse grits keep far more high-harmonic energy.
fn grit_tilt(grit_size: u16) -> f64 {
    match grit_size {
        80 => 0.35,
        150 => 0.85,
        240 => 1.50,
        other => 0.5 + other as f64 / 200.0,
    }
}

/// Generator settings. `seed` drives every random decision in the corpus.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub seed: u64,
    pub clip_seconds: f64,
    pub sample_rate: u32,
}

impl SynthConfig {
    pub fn new(seed: u64) -> Self {
        SynthConfig {
            seed,
            clip_seconds: 6.0,
            sample_rate: 44100,
        }
    }

    fn validate(&self) -> Result<()> {
        // The clip must hold: latest onset + event + half a second of tail
        // for the post-event idle window.
        let needed = ONSET_RANGE_S.1 + EVENT_SECONDS + 1.0 + 0.05;
        if self.clip_seconds < needed {
            return Err(Error::Config(format!(
                "clip length {} s too short, need at least {needed} s",
                self.clip_seconds
            )));
        }
        if self.sample_rate < 8000 {
            return Err(Error::Config(format!(
                "sample rate {} Hz too low for the tonal model",
                self.sample_rate
            )));
        }
        Ok(())
    }
}

/// How well the generated corpus separates wear classes when the machine
/// parameters are held fixed: the smallest between-class band-profile gap
/// within any single configuration, in units of within-class spread. Pooled
/// across configurations the classes are allowed to overlap; the material
/// noise gain puts them there on purpose.
#[derive(Debug, Clone, Copy)]
pub struct SeparabilityReport {
    pub min_ratio: f64,
    /// The wear-class pair achieving `min_ratio`.
    pub worst_pair: (u8, u8),
    /// The configuration in which that pair is closest.
    pub worst_configuration: ParameterConfiguration,
}

/// What [`synthesize_corpus`] produced.
pub struct CorpusSummary {
    pub dir: PathBuf,
    pub records: Vec<SandingRecordMeta>,
    /// Ground-truth event onsets, `(clip_path, onset_seconds)`.
    pub onsets: Vec<(String, f64)>,
    pub separability: SeparabilityReport,
}

/// The full experimental grid in canonical order: wear, feed, grit,
/// material, position, repetition; 810 records.
pub fn corpus_records() -> Vec<SandingRecordMeta> {
    let mut records = Vec::with_capacity(810);
    for wear in WEAR_LEVELS {
        for feed in FEED_SPEEDS {
            for grit in GRIT_SIZES {
                for material in Material::ALL {
                    for position in Position::ALL {
                        for repetition in super::REPETITIONS {
                            records.push(SandingRecordMeta {
                                wear_level: wear,
                                feed_speed: feed,
                                grit_size: grit,
                                material,
                                position,
                                repetition,
                                clip_path: format!(
                                    "wavs/w{wear}_f{feed}_g{grit}_{material}_{position}_r{repetition}.wav"
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    records
}

/// Sine oscillator via the two-term recurrence; exact frequency, no
/// per-sample trig. Error growth over a six-second clip is far below the
/// noise floors in the mix.
struct Oscillator {
    coeff: f64,
    prev: f64,
    prev2: f64,
}

impl Oscillator {
    /// First call to `next` returns `sin(phase)`, advancing by `omega`
    /// radians per sample after that.
    fn new(omega: f64, phase: f64) -> Self {
        Oscillator {
            coeff: 2.0 * omega.cos(),
            prev: (phase - omega).sin(),
            prev2: (phase - 2.0 * omega).sin(),
        }
    }

    fn next(&mut self) -> f64 {
        let y = self.coeff * self.prev - self.prev2;
        self.prev2 = self.prev;
        self.prev = y;
        y
    }
}

/// Generate one clip. Returns the audio and the exact onset sample of the
/// sanding event. Deterministic in `(config, record, clip_seed)`.
pub fn synthesize_clip(
    config: &SynthConfig,
    record: &SandingRecordMeta,
    clip_seed: u64,
) -> Result<(AudioClip, usize)> {
    config.validate()?;
    record.validate()?;
    let sr = config.sample_rate as f64;
    let n = (config.clip_seconds * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(clip_seed);

    // Scalar draws first, in fixed order.
    let amplitude = STACK_AMPLITUDE
        * if record.material == Material::Hard {
            HARD_MATERIAL_GAIN
        } else {
            1.0
        }
        * rng.random_range(AMPLITUDE_JITTER.0..AMPLITUDE_JITTER.1);
    let onset = rng.random_range(
        (ONSET_RANGE_S.0 * sr).round() as usize..=(ONSET_RANGE_S.1 * sr).round() as usize,
    );
    let wear_sigma = WEAR_NOISE_BASE_SIGMA
        * f64::powi(2.0, record.wear_level as i32)
        * if record.material == Material::Hard {
            HARD_CONTACT_NOISE_GAIN
        } else {
            1.0
        }
        * rng.random_range(WEAR_NOISE_JITTER.0..WEAR_NOISE_JITTER.1);

    let tau = 2.0 * std::f64::consts::PI;
    let mut baseline: Vec<Oscillator> = BASELINE_TONES
        .iter()
        .map(|&(hz, _)| Oscillator::new(tau * hz / sr, rng.random_range(0.0..tau)))
        .collect();

    let f0 = fundamental_hz(record.feed_speed);
    let tilt = grit_tilt(record.grit_size);
    let n_harmonics = MAX_HARMONICS.min((0.45 * sr / f0) as usize);
    // Normalize so the stack's total power is amplitude^2 / 2 regardless of
    // tilt; grit then changes shape, not level.
    let norm: f64 = (1..=n_harmonics)
        .map(|h| (h as f64).powf(-2.0 * tilt))
        .sum::<f64>()
        .sqrt();
    let mut stack: Vec<(f64, Oscillator)> = (1..=n_harmonics)
        .map(|h| {
            let gain = amplitude * (h as f64).powf(-tilt) / norm;
            let osc = Oscillator::new(tau * h as f64 * f0 / sr, rng.random_range(0.0..tau));
            (gain, osc)
        })
        .collect();

    let event_len = (EVENT_SECONDS * sr).round() as usize;
    let edge = (EVENT_EDGE_S * sr).round() as usize;
    let stop = onset + event_len;
    debug_assert!(stop + (0.55 * sr) as usize <= n);

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = 0.0;
        for (osc, &(_, amp)) in baseline.iter_mut().zip(&BASELINE_TONES) {
            s += amp * osc.next();
        }
        s += BASELINE_NOISE_SIGMA * rng.sample::<f64, _>(StandardNormal);
        if i >= onset && i < stop {
            let k = i - onset;
            let envelope = if k < edge {
                0.5 * (1.0 - (std::f64::consts::PI * k as f64 / edge as f64).cos())
            } else if k >= event_len - edge {
                let t = event_len - 1 - k;
                0.5 * (1.0 - (std::f64::consts::PI * t as f64 / edge as f64).cos())
            } else {
                1.0
            };
            let mut event = 0.0;
            for (gain, osc) in stack.iter_mut() {
                event += *gain * osc.next();
            }
            event += wear_sigma * rng.sample::<f64, _>(StandardNormal);
            s += envelope * event;
        }
        samples.push(s);
    }

    Ok((
        AudioClip {
            samples,
            sample_rate: config.sample_rate,
        },
        onset,
    ))
}

/// Mean log power in equal-width frequency bands, measured one second into
/// the event where the signal is steady. The wear separability check runs
/// on these profiles.
fn band_profile(clip: &AudioClip, onset: usize) -> Result<[f64; PROFILE_BANDS]> {
    let start = onset + clip.sample_rate as usize;
    if start + PROFILE_FFT > clip.samples.len() {
        return Err(Error::ClipTooShort {
            needed: start + PROFILE_FFT,
            have: clip.samples.len(),
        });
    }
    let plan = RealFft::new(PROFILE_FFT)?;
    let mut scratch = vec![Complex64::new(0.0, 0.0); PROFILE_FFT / 2];
    let mut out = vec![Complex64::new(0.0, 0.0); plan.output_len()];
    plan.forward(
        &clip.samples[start..start + PROFILE_FFT],
        &mut scratch,
        &mut out,
    );

    let n_bins = plan.output_len();
    let mut profile = [0.0; PROFILE_BANDS];
    for (b, slot) in profile.iter_mut().enumerate() {
        let lo = b * n_bins / PROFILE_BANDS;
        let hi = ((b + 1) * n_bins / PROFILE_BANDS).max(lo + 1);
        let mean: f64 = out[lo..hi]
            .iter()
            .map(|v| v.norm_sqr() / PROFILE_FFT as f64)
            .sum::<f64>()
            / (hi - lo) as f64;
        *slot = (mean + 1e-20).ln();
    }
    Ok(profile)
}

/// Worst-case wear separation, measured within each machine configuration
/// so the deliberate cross-material overlap does not mask a generator bug.
fn separability(
    labeled_profiles: &[(ParameterConfiguration, u8, [f64; PROFILE_BANDS])],
) -> Result<SeparabilityReport> {
    let mut by_config: std::collections::BTreeMap<
        ParameterConfiguration,
        Vec<Vec<[f64; PROFILE_BANDS]>>,
    > = std::collections::BTreeMap::new();
    for &(config, wear, profile) in labeled_profiles {
        by_config.entry(config).or_insert_with(|| vec![Vec::new(); WEAR_LEVELS.len()])[wear as usize]
            .push(profile);
    }

    let mut min_ratio = f64::INFINITY;
    let mut worst_pair = (0u8, 0u8);
    let mut worst_configuration = None;
    for (config, groups) in &by_config {
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for group in groups {
            if group.len() < 2 {
                return Err(Error::Separability(format!(
                    "need at least two clips per wear class in configuration {config}"
                )));
            }
            let n = group.len() as f64;
            let mut mean = [0.0; PROFILE_BANDS];
            for p in group {
                for (m, v) in mean.iter_mut().zip(p) {
                    *m += v / n;
                }
            }
            let mut std = [0.0; PROFILE_BANDS];
            for p in group {
                for ((s, v), m) in std.iter_mut().zip(p).zip(&mean) {
                    *s += (v - m) * (v - m) / n;
                }
            }
            for s in std.iter_mut() {
                *s = s.sqrt();
            }
            means.push(mean);
            stds.push(std);
        }

        for a in 0..means.len() {
            for b in a + 1..means.len() {
                let ratio = (0..PROFILE_BANDS)
                    .map(|j| {
                        let spread = stds[a][j].max(stds[b][j]).max(1e-12);
                        (means[a][j] - means[b][j]).abs() / spread
                    })
                    .fold(0.0, f64::max);
                if ratio < min_ratio {
                    min_ratio = ratio;
                    worst_pair = (a as u8, b as u8);
                    worst_configuration = Some(*config);
                }
            }
        }
    }
    let worst_configuration = worst_configuration
        .ok_or_else(|| Error::Separability("no profiles to check".into()))?;
    Ok(SeparabilityReport {
        min_ratio,
        worst_pair,
        worst_configuration,
    })
}

/// Generate the full 810-clip corpus into `out_dir`: WAV files under
/// `wavs/`, `manifest.csv`, and the `onsets.csv` ground-truth sidecar.
/// Fails if any configuration's wear classes come out closer than the
/// separability floor.
pub fn synthesize_corpus(config: &SynthConfig, out_dir: &Path) -> Result<CorpusSummary> {
    config.validate()?;
    let records = corpus_records();
    std::fs::create_dir_all(out_dir.join("wavs")).map_err(|e| Error::io(out_dir, e))?;

    let per_clip: Vec<(f64, [f64; PROFILE_BANDS])> = records
        .par_iter()
        .enumerate()
        .map(|(index, record)| {
            let clip_seed = config.seed ^ index as u64;
            let (clip, onset) = synthesize_clip(config, record, clip_seed)?;
            let profile = band_profile(&clip, onset)?;
            write_wav(&out_dir.join(&record.clip_path), &clip)?;
            Ok((onset as f64 / config.sample_rate as f64, profile))
        })
        .collect::<Result<_>>()?;

    let onsets: Vec<(String, f64)> = records
        .iter()
        .zip(&per_clip)
        .map(|(r, (onset, _))| (r.clip_path.clone(), *onset))
        .collect();
    let labeled_profiles: Vec<(ParameterConfiguration, u8, [f64; PROFILE_BANDS])> = records
        .iter()
        .zip(&per_clip)
        .map(|(r, (_, p))| (r.parameter_configuration(), r.wear_level, *p))
        .collect();

    let separability = separability(&labeled_profiles)?;
    if separability.min_ratio <= MIN_SEPARABILITY_RATIO {
        return Err(Error::Separability(format!(
            "wear classes {} and {} in configuration {} only {:.2} within-class deviations apart (need > {MIN_SEPARABILITY_RATIO})",
            separability.worst_pair.0,
            separability.worst_pair.1,
            separability.worst_configuration,
            separability.min_ratio
        )));
    }

    write_manifest(&out_dir.join("manifest.csv"), &records)?;
    write_onsets(&out_dir.join("onsets.csv"), &onsets)?;

    Ok(CorpusSummary {
        dir: out_dir.to_path_buf(),
        records,
        onsets,
        separability,
    })
}
