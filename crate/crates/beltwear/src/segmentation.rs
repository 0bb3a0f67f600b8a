//! Locating the sanding event in a recording and cutting windows from it.
//!
//! Detection works on total mel-band energy per STFT frame. The first half
//! second of the clip is taken as machine-idle noise; a frame counts as
//! active when its trailing five-frame mean energy exceeds
//! `mean + k * std` of the noise frames, and an event starts at the first
//! frame of a sustained active run. Onsets and stops are reported as frame
//! **center** times: a Hann-windowed frame only accumulates meaningful
//! event energy once the event reaches well inside it, so the center tracks
//! the true onset far better than the frame start does.
//!
//! From a detected start, three kinds of windows are cut:
//! * the analysis window, 1.8 s starting 1.3 s after onset (steady sanding);
//! * a 0.5 s sanding-state window at the analysis start;
//! * 0.5 s idle windows before the onset and after the stop, each kept half
//!   a second clear of the event edges.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dataset::{load_manifest, load_wav, write_manifest, write_wav, AudioClip, Corpus, SandingRecordMeta};
use crate::dsp::{build_filterbank, power_spectrogram, FilterScale};
use crate::error::{Error, Result};
use crate::util::{fmt_f64, write_atomic};

/// Seconds between detected onset and the start of the analysis window.
pub const ANALYSIS_OFFSET_S: f64 = 1.3;
/// Analysis window length in seconds.
pub const ANALYSIS_SECONDS: f64 = 1.8;
/// Idle/sanding state window length in seconds.
pub const STATE_SECONDS: f64 = 0.5;
/// Clearance kept between an event edge and an idle window.
pub const STATE_GAP_S: f64 = 0.5;

/// Event detector settings.
#[derive(Debug, Clone, Copy)]
pub struct DetectorConfig {
    /// STFT window for the detection spectrogram, in milliseconds.
    pub window_ms: u32,
    /// Mel filters for the detection spectrogram.
    pub filter_count: usize,
    /// `k` in the `mean + k * std` threshold.
    pub threshold_sigmas: f64,
    /// Frames the smoothed energy must stay on one side of the threshold.
    pub sustain_frames: usize,
    /// Length of the leading noise-estimation window, seconds.
    pub noise_seconds: f64,
    /// Width of the trailing moving average applied to frame energies.
    pub smooth_frames: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            window_ms: 64,
            filter_count: 64,
            threshold_sigmas: 6.0,
            sustain_frames: 10,
            noise_seconds: 0.5,
            smooth_frames: 5,
        }
    }
}

/// Detected event boundaries, in seconds from clip start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventMarkers {
    pub start_s: f64,
    pub stop_s: f64,
}

impl EventMarkers {
    /// Where the analysis window begins.
    pub fn analysis_start_s(&self) -> f64 {
        self.start_s + ANALYSIS_OFFSET_S
    }
}

/// Total linear mel-band energy of each frame.
fn frame_energies(clip: &AudioClip, config: &DetectorConfig) -> Result<(Vec<f64>, usize, usize)> {
    let spec = power_spectrogram(clip, config.window_ms)?;
    let bank = build_filterbank(
        FilterScale::Mel,
        config.filter_count,
        spec.fft_size,
        clip.sample_rate,
    )?;
    let bands = bank.apply(&spec)?;
    let energies = bands.iter().map(|frame| frame.iter().sum()).collect();
    Ok((energies, spec.frame_len, spec.hop_len))
}

/// Trailing moving average over up to `width` frames.
fn smooth(energies: &[f64], width: usize) -> Vec<f64> {
    let width = width.max(1);
    let mut out = Vec::with_capacity(energies.len());
    let mut acc = 0.0;
    for i in 0..energies.len() {
        acc += energies[i];
        if i >= width {
            acc -= energies[i - width];
        }
        out.push(acc / (i + 1).min(width) as f64);
    }
    out
}

/// Detect the sanding event. Fails with [`Error::NoEvent`] when no sustained
/// energy rise exists.
pub fn detect_event(clip: &AudioClip, config: &DetectorConfig) -> Result<EventMarkers> {
    if config.sustain_frames == 0 {
        return Err(Error::Config("sustain frame count must be positive".into()));
    }
    let (energies, frame_len, hop_len) = frame_energies(clip, config)?;
    let sr = clip.sample_rate as f64;

    let noise_samples = (config.noise_seconds * sr).round() as usize;
    let noise_frames = energies
        .iter()
        .enumerate()
        .take_while(|(i, _)| i * hop_len + frame_len <= noise_samples)
        .count();
    if noise_frames < 2 {
        return Err(Error::ClipTooShort {
            needed: noise_samples + frame_len,
            have: clip.samples.len(),
        });
    }
    let noise = &energies[..noise_frames];
    let mean = noise.iter().sum::<f64>() / noise_frames as f64;
    let var = noise.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / noise_frames as f64;
    let threshold = mean + config.threshold_sigmas * var.sqrt();

    let smoothed = smooth(&energies, config.smooth_frames);
    let center = |i: usize| (i * hop_len + frame_len / 2) as f64 / sr;

    // Start: first frame opening a run of `sustain_frames` frames above
    // threshold.
    let sustain = config.sustain_frames;
    let mut start_frame = None;
    let mut run = 0usize;
    for (i, &e) in smoothed.iter().enumerate() {
        if e > threshold {
            run += 1;
            if run == sustain {
                start_frame = Some(i + 1 - sustain);
                break;
            }
        } else {
            run = 0;
        }
    }
    let start_frame = start_frame.ok_or_else(|| {
        Error::NoEvent(format!(
            "no {sustain}-frame run above threshold {threshold:.3e} in {} frames",
            smoothed.len()
        ))
    })?;

    // Stop: first frame after the event opening an equally sustained run at
    // or below threshold. An event running into the end of the clip gets the
    // last frame center.
    let mut stop_frame = smoothed.len() - 1;
    run = 0;
    for (i, &e) in smoothed.iter().enumerate().skip(start_frame + sustain) {
        if e <= threshold {
            run += 1;
            if run == sustain {
                stop_frame = i + 1 - sustain;
                break;
            }
        } else {
            run = 0;
        }
    }

    Ok(EventMarkers {
        start_s: center(start_frame),
        stop_s: center(stop_frame),
    })
}

/// Detected event onset only.
pub fn detect_start(clip: &AudioClip, config: &DetectorConfig) -> Result<f64> {
    Ok(detect_event(clip, config)?.start_s)
}

fn cut(clip: &AudioClip, begin: i64, len: usize, what: &str) -> Result<AudioClip> {
    if begin < 0 {
        return Err(Error::Domain(format!(
            "{what} window starts {begin} samples before the clip"
        )));
    }
    let begin = begin as usize;
    let end = begin + len;
    if end > clip.samples.len() {
        return Err(Error::ClipTooShort {
            needed: end,
            have: clip.samples.len(),
        });
    }
    Ok(AudioClip {
        samples: clip.samples[begin..end].to_vec(),
        sample_rate: clip.sample_rate,
    })
}

/// Cut the 1.8 s analysis window beginning 1.3 s after `start_s`. The result
/// always has exactly `round(1.8 * sample_rate)` samples.
pub fn cut_analysis_window(clip: &AudioClip, start_s: f64) -> Result<AudioClip> {
    let sr = clip.sample_rate as f64;
    let begin = ((start_s + ANALYSIS_OFFSET_S) * sr).round() as i64;
    let len = (ANALYSIS_SECONDS * sr).round() as usize;
    cut(clip, begin, len, "analysis")
}

/// Cut the 0.5 s sanding-state window at the start of the analysis region.
pub fn cut_sanding_state_window(clip: &AudioClip, markers: &EventMarkers) -> Result<AudioClip> {
    let sr = clip.sample_rate as f64;
    let begin = ((markers.analysis_start_s()) * sr).round() as i64;
    let len = (STATE_SECONDS * sr).round() as usize;
    cut(clip, begin, len, "sanding state")
}

/// Cut the idle windows: `(pre, post)`, each 0.5 s, ending 0.5 s before the
/// onset and starting 0.5 s after the stop.
pub fn cut_idle_windows(clip: &AudioClip, markers: &EventMarkers) -> Result<(AudioClip, AudioClip)> {
    let sr = clip.sample_rate as f64;
    let len = (STATE_SECONDS * sr).round() as usize;
    let pre_end = ((markers.start_s - STATE_GAP_S) * sr).round() as i64;
    let pre = cut(clip, pre_end - len as i64, len, "pre-event idle")?;
    let post_begin = ((markers.stop_s + STATE_GAP_S) * sr).round() as i64;
    let post = cut(clip, post_begin, len, "post-event idle")?;
    Ok((pre, post))
}

/// Where event markers come from when segmenting a corpus.
pub enum MarkerSource<'a> {
    /// Run the detector on every clip.
    Detect(DetectorConfig),
    /// Trust a ground-truth onset table; stops are `onset + event_seconds`.
    Truth {
        onsets: &'a [(String, f64)],
        event_seconds: f64,
    },
}

/// Result of segmenting one corpus into a directory of window files.
pub struct SegmentationSummary {
    pub dir: PathBuf,
    /// Accepted records with their markers, in manifest order.
    pub markers: Vec<(SandingRecordMeta, EventMarkers)>,
    /// `(clip_path, reason)` for clips that failed detection or cutting.
    pub rejects: Vec<(String, String)>,
}

impl SegmentationSummary {
    pub fn reject_fraction(&self) -> f64 {
        let total = self.markers.len() + self.rejects.len();
        if total == 0 {
            0.0
        } else {
            self.rejects.len() as f64 / total as f64
        }
    }
}

/// File stem used for a record's window files.
fn window_stem(record: &SandingRecordMeta) -> String {
    Path::new(&record.clip_path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| record.clip_path.replace('/', "_"))
}

pub const MARKERS_HEADER: &str = "clip_path,start_s,stop_s,analysis_start_s";
pub const REJECTS_HEADER: &str = "clip_path,reason";

/// Segment every clip of `corpus` into `out_dir`.
///
/// Writes `analysis/`, `state/`, `pre/`, and `post/` window files, a
/// `markers.csv`, a `rejects.csv`, and a manifest listing the accepted
/// records. Individual clip failures become rejects rather than errors.
pub fn segment_corpus(
    corpus: &Corpus,
    source: &MarkerSource<'_>,
    out_dir: &Path,
) -> Result<SegmentationSummary> {
    for sub in ["analysis", "state", "pre", "post"] {
        std::fs::create_dir_all(out_dir.join(sub)).map_err(|e| Error::io(out_dir, e))?;
    }
    let truth: Option<BTreeMap<&str, f64>> = match source {
        MarkerSource::Detect(_) => None,
        MarkerSource::Truth { onsets, .. } => Some(
            onsets
                .iter()
                .map(|(path, onset)| (path.as_str(), *onset))
                .collect(),
        ),
    };

    type ClipOutcome = std::result::Result<(SandingRecordMeta, EventMarkers), (String, String)>;
    let outcomes: Vec<ClipOutcome> = corpus
        .records
        .par_iter()
        .map(|record| {
            let segment_one = || -> Result<EventMarkers> {
                let clip = corpus.load_clip(record)?;
                let markers = match source {
                    MarkerSource::Detect(detector) => detect_event(&clip, detector)?,
                    MarkerSource::Truth { event_seconds, .. } => {
                        let onset = truth
                            .as_ref()
                            .unwrap()
                            .get(record.clip_path.as_str())
                            .copied()
                            .ok_or_else(|| {
                                Error::Domain(format!("no onset entry for {}", record.clip_path))
                            })?;
                        EventMarkers {
                            start_s: onset,
                            stop_s: onset + event_seconds,
                        }
                    }
                };
                let analysis = cut_analysis_window(&clip, markers.start_s)?;
                let state = cut_sanding_state_window(&clip, &markers)?;
                let (pre, post) = cut_idle_windows(&clip, &markers)?;
                let stem = window_stem(record);
                write_wav(&out_dir.join("analysis").join(format!("{stem}.wav")), &analysis)?;
                write_wav(&out_dir.join("state").join(format!("{stem}.wav")), &state)?;
                write_wav(&out_dir.join("pre").join(format!("{stem}.wav")), &pre)?;
                write_wav(&out_dir.join("post").join(format!("{stem}.wav")), &post)?;
                Ok(markers)
            };
            match segment_one() {
                Ok(markers) => Ok((record.clone(), markers)),
                Err(e) => Err((record.clip_path.clone(), e.to_string())),
            }
        })
        .collect();

    let mut markers = Vec::new();
    let mut rejects = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(pair) => markers.push(pair),
            Err(reject) => rejects.push(reject),
        }
    }

    let mut markers_csv = String::from(MARKERS_HEADER);
    markers_csv.push('\n');
    for (record, m) in &markers {
        markers_csv.push_str(&format!(
            "{},{},{},{}\n",
            record.clip_path,
            fmt_f64(m.start_s),
            fmt_f64(m.stop_s),
            fmt_f64(m.analysis_start_s())
        ));
    }
    write_atomic(&out_dir.join("markers.csv"), markers_csv.as_bytes())?;

    let mut rejects_csv = String::from(REJECTS_HEADER);
    rejects_csv.push('\n');
    for (path, reason) in &rejects {
        rejects_csv.push_str(&format!("{},{}\n", path, reason.replace(',', ";")));
    }
    write_atomic(&out_dir.join("rejects.csv"), rejects_csv.as_bytes())?;

    let accepted: Vec<SandingRecordMeta> = markers.iter().map(|(r, _)| r.clone()).collect();
    write_manifest(&out_dir.join("manifest.csv"), &accepted)?;

    Ok(SegmentationSummary {
        dir: out_dir.to_path_buf(),
        markers,
        rejects,
    })
}

/// The kinds of window files a segmented corpus holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    /// 1.8 s steady-sanding analysis window.
    Analysis,
    /// 0.5 s sanding-state window.
    Sanding,
    /// 0.5 s idle window before the event.
    PreIdle,
    /// 0.5 s idle window after the event.
    PostIdle,
}

impl SegmentKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            SegmentKind::Analysis => "analysis",
            SegmentKind::Sanding => "state",
            SegmentKind::PreIdle => "pre",
            SegmentKind::PostIdle => "post",
        }
    }
}

impl std::fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SegmentKind::Analysis => "analysis",
            SegmentKind::Sanding => "state",
            SegmentKind::PreIdle => "pre",
            SegmentKind::PostIdle => "post",
        })
    }
}

impl std::str::FromStr for SegmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analysis" => Ok(SegmentKind::Analysis),
            "state" => Ok(SegmentKind::Sanding),
            "pre" => Ok(SegmentKind::PreIdle),
            "post" => Ok(SegmentKind::PostIdle),
            other => Err(Error::Domain(format!("unknown segment kind {other:?}"))),
        }
    }
}

/// A directory produced by [`segment_corpus`], opened for reading windows.
pub struct SegmentedCorpus {
    pub dir: PathBuf,
    pub records: Vec<SandingRecordMeta>,
}

impl SegmentedCorpus {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let records = load_manifest(&dir.join("manifest.csv"))?;
        Ok(SegmentedCorpus { dir, records })
    }

    /// Path of one window file.
    pub fn window_path(&self, record: &SandingRecordMeta, kind: SegmentKind) -> PathBuf {
        self.dir
            .join(kind.dir_name())
            .join(format!("{}.wav", window_stem(record)))
    }

    pub fn load_window(&self, record: &SandingRecordMeta, kind: SegmentKind) -> Result<AudioClip> {
        load_wav(&self.window_path(record, kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth, Material, Position};

    fn record(wear: u8) -> SandingRecordMeta {
        SandingRecordMeta {
            wear_level: wear,
            feed_speed: 14,
            grit_size: 150,
            material: Material::Soft,
            position: Position::Left,
            repetition: 1,
            clip_path: "wavs/t.wav".into(),
        }
    }

    fn synth_clip(wear: u8, seed: u64) -> (AudioClip, f64) {
        let config = synth::SynthConfig::new(7);
        let (clip, onset) = synth::synthesize_clip(&config, &record(wear), seed).unwrap();
        (clip, onset as f64 / 44100.0)
    }

    #[test]
    fn detected_onset_lands_within_fifty_ms_of_truth() {
        let detector = DetectorConfig::default();
        for (wear, seed) in [(0, 1), (2, 2), (4, 3), (1, 4), (3, 5)] {
            let (clip, truth) = synth_clip(wear, seed);
            let markers = detect_event(&clip, &detector).unwrap();
            let err = markers.start_s - truth;
            assert!(
                err.abs() <= 0.050,
                "wear {wear} seed {seed}: detected {} truth {truth} err {err}",
                markers.start_s
            );
        }
    }

    #[test]
    fn detected_stop_tracks_the_event_end() {
        let detector = DetectorConfig::default();
        let (clip, truth_start) = synth_clip(2, 9);
        let markers = detect_event(&clip, &detector).unwrap();
        let truth_stop = truth_start + synth::EVENT_SECONDS;
        let err = markers.stop_s - truth_stop;
        // The trailing mean and sustain requirement delay the reported stop
        // slightly; it must never precede the true stop by more than a frame.
        assert!(
            (-0.05..=0.25).contains(&err),
            "stop {} truth {truth_stop} err {err}",
            markers.stop_s
        );
    }

    #[test]
    fn idle_clip_yields_no_event() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let clip = AudioClip {
            samples: (0..264_600).map(|_| rng.random_range(-0.01..0.01)).collect(),
            sample_rate: 44100,
        };
        assert!(matches!(
            detect_event(&clip, &DetectorConfig::default()),
            Err(Error::NoEvent(_))
        ));
    }

    #[test]
    fn zero_sigma_threshold_still_detects_a_rise() {
        // Constant-amplitude noise window makes the threshold degenerate
        // (std 0); with k = 0 the detector must still fire only at the rise.
        let sr = 44100usize;
        let mut samples = vec![0.0; 6 * sr];
        for (i, s) in samples.iter_mut().enumerate() {
            *s = 0.01 * ((i % 2) as f64 * 2.0 - 1.0); // alternating +-0.01
        }
        let rise = 2 * sr;
        for (i, s) in samples.iter_mut().enumerate().skip(rise) {
            *s += 0.2 * (((i * 7) % 13) as f64 / 13.0 - 0.5);
        }
        let clip = AudioClip {
            samples,
            sample_rate: sr as u32,
        };
        let detector = DetectorConfig {
            threshold_sigmas: 0.0,
            ..DetectorConfig::default()
        };
        let markers = detect_event(&clip, &detector).unwrap();
        let err = markers.start_s - rise as f64 / sr as f64;
        assert!(err.abs() < 0.1, "start {} err {err}", markers.start_s);
    }

    #[test]
    fn analysis_window_has_exact_length_and_position() {
        let (clip, truth) = synth_clip(1, 6);
        let cutout = cut_analysis_window(&clip, truth).unwrap();
        assert_eq!(cutout.samples.len(), 79_380);
        let begin = ((truth + ANALYSIS_OFFSET_S) * 44100.0).round() as usize;
        assert_eq!(cutout.samples[0], clip.samples[begin]);
        assert_eq!(cutout.samples[79_379], clip.samples[begin + 79_379]);
    }

    #[test]
    fn analysis_window_near_clip_end_is_rejected() {
        let clip = AudioClip {
            samples: vec![0.0; 44100],
            sample_rate: 44100,
        };
        assert!(cut_analysis_window(&clip, 0.5).is_err());
    }

    #[test]
    fn state_windows_have_exact_length_and_avoid_the_event() {
        let (clip, truth) = synth_clip(3, 8);
        let markers = EventMarkers {
            start_s: truth,
            stop_s: truth + synth::EVENT_SECONDS,
        };
        let sanding = cut_sanding_state_window(&clip, &markers).unwrap();
        let (pre, post) = cut_idle_windows(&clip, &markers).unwrap();
        for w in [&sanding, &pre, &post] {
            assert_eq!(w.samples.len(), 22_050);
        }
        // Idle windows carry far less energy than the sanding window.
        let rms = |c: &AudioClip| {
            (c.samples.iter().map(|s| s * s).sum::<f64>() / c.samples.len() as f64).sqrt()
        };
        assert!(rms(&sanding) > 3.0 * rms(&pre));
        assert!(rms(&sanding) > 3.0 * rms(&post));
    }

    #[test]
    fn smoothing_averages_trailing_frames() {
        let smoothed = smooth(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3);
        let expected = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0];
        for (s, e) in smoothed.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12);
        }
    }
}
