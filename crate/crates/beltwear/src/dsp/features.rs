//! Feature extraction configuration and the flattened feature vector.

use std::fmt;
use std::str::FromStr;

use super::cepstra::cepstra;
use super::filterbank::{build_filterbank, log_filterbank_energies, FilterScale, LOG_FLOOR};
use super::stft::{frame_geometry, power_spectrogram};
use crate::dataset::AudioClip;
use crate::error::{Error, Result};

/// Allowed analysis window lengths in milliseconds.
pub const WINDOW_MS_CHOICES: [u32; 3] = [32, 64, 128];
/// Allowed filterbank sizes.
pub const FILTER_COUNT_CHOICES: [usize; 3] = [32, 64, 128];
/// Allowed cepstral coefficient counts.
pub const COEFF_COUNT_CHOICES: [usize; 3] = [20, 40, 60];

/// The five spectral representations the pipeline can extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMethod {
    /// Log power spectrogram, no filterbank.
    Spectrogram,
    /// Log mel filterbank energies.
    MelSpectrogram,
    /// Cepstra of log mel energies.
    Mfcc,
    /// Cepstra of log inverse-mel energies.
    Imfcc,
    /// Cepstra of log linear-band energies.
    Lfcc,
}

impl FeatureMethod {
    pub const ALL: [FeatureMethod; 5] = [
        FeatureMethod::Spectrogram,
        FeatureMethod::MelSpectrogram,
        FeatureMethod::Mfcc,
        FeatureMethod::Imfcc,
        FeatureMethod::Lfcc,
    ];

    /// Whether the method ends in a DCT (so the coefficient count matters).
    pub fn is_cepstral(self) -> bool {
        matches!(
            self,
            FeatureMethod::Mfcc | FeatureMethod::Imfcc | FeatureMethod::Lfcc
        )
    }

    /// Whether the method uses a filterbank (so the filter count matters).
    pub fn uses_filterbank(self) -> bool {
        !matches!(self, FeatureMethod::Spectrogram)
    }

    fn filter_scale(self) -> Option<FilterScale> {
        match self {
            FeatureMethod::Spectrogram => None,
            FeatureMethod::MelSpectrogram | FeatureMethod::Mfcc => Some(FilterScale::Mel),
            FeatureMethod::Imfcc => Some(FilterScale::InverseMel),
            FeatureMethod::Lfcc => Some(FilterScale::Linear),
        }
    }
}

impl fmt::Display for FeatureMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FeatureMethod::Spectrogram => "spectrogram",
            FeatureMethod::MelSpectrogram => "mel",
            FeatureMethod::Mfcc => "mfcc",
            FeatureMethod::Imfcc => "imfcc",
            FeatureMethod::Lfcc => "lfcc",
        };
        f.write_str(name)
    }
}

impl FromStr for FeatureMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectrogram" | "spec" => Ok(FeatureMethod::Spectrogram),
            "mel" | "mel_spectrogram" => Ok(FeatureMethod::MelSpectrogram),
            "mfcc" => Ok(FeatureMethod::Mfcc),
            "imfcc" => Ok(FeatureMethod::Imfcc),
            "lfcc" => Ok(FeatureMethod::Lfcc),
            other => Err(Error::Config(format!(
                "unknown feature method {other:?} (expected spectrogram, mel, mfcc, imfcc, lfcc)"
            ))),
        }
    }
}

/// Validated extraction parameters. The frame hop is always a quarter of the
/// frame length and is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralConfig {
    pub method: FeatureMethod,
    /// Analysis window length in milliseconds, one of [`WINDOW_MS_CHOICES`].
    pub window_ms: u32,
    /// Filterbank size, one of [`FILTER_COUNT_CHOICES`]. Unused by
    /// [`FeatureMethod::Spectrogram`].
    pub filter_count: usize,
    /// Retained cepstral coefficients, one of [`COEFF_COUNT_CHOICES`].
    /// Used only by cepstral methods.
    pub coeff_count: usize,
    pub sample_rate: u32,
}

impl SpectralConfig {
    pub fn new(
        method: FeatureMethod,
        window_ms: u32,
        filter_count: usize,
        coeff_count: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        if !WINDOW_MS_CHOICES.contains(&window_ms) {
            return Err(Error::Config(format!(
                "window length {window_ms} ms not in {WINDOW_MS_CHOICES:?}"
            )));
        }
        if !FILTER_COUNT_CHOICES.contains(&filter_count) {
            return Err(Error::Config(format!(
                "filter count {filter_count} not in {FILTER_COUNT_CHOICES:?}"
            )));
        }
        if !COEFF_COUNT_CHOICES.contains(&coeff_count) {
            return Err(Error::Config(format!(
                "coefficient count {coeff_count} not in {COEFF_COUNT_CHOICES:?}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        Ok(SpectralConfig {
            method,
            window_ms,
            filter_count,
            coeff_count,
            sample_rate,
        })
    }

    /// The parameters used throughout when nothing else is asked for:
    /// 64 ms windows, 64 filters, 40 coefficients.
    pub fn defaults(method: FeatureMethod, sample_rate: u32) -> Self {
        SpectralConfig {
            method,
            window_ms: 64,
            filter_count: 64,
            coeff_count: 40,
            sample_rate,
        }
    }

    /// Width of one frame's feature row for this method.
    pub fn frame_width(&self) -> Result<usize> {
        Ok(match self.method {
            FeatureMethod::Spectrogram => {
                let geo = frame_geometry(self.window_ms, self.sample_rate, usize::MAX)?;
                geo.fft_size / 2 + 1
            }
            FeatureMethod::MelSpectrogram => self.filter_count,
            FeatureMethod::Mfcc | FeatureMethod::Imfcc | FeatureMethod::Lfcc => self.coeff_count,
        })
    }

    /// Flattened feature length for a clip of `clip_len` samples.
    pub fn feature_len(&self, clip_len: usize) -> Result<usize> {
        let geo = frame_geometry(self.window_ms, self.sample_rate, clip_len)?;
        Ok(geo.n_frames * self.frame_width()?)
    }
}

/// A flattened per-clip feature vector plus the frame layout it came from.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    /// Frame-major concatenation: frame 0's row, then frame 1's, ...
    pub values: Vec<f64>,
    pub n_frames: usize,
    pub frame_width: usize,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Extract the configured features from `clip` as one flat vector.
pub fn extract_features(clip: &AudioClip, config: &SpectralConfig) -> Result<FeatureVector> {
    if clip.sample_rate != config.sample_rate {
        return Err(Error::Mismatch(format!(
            "clip sampled at {} Hz but configuration expects {} Hz",
            clip.sample_rate, config.sample_rate
        )));
    }
    let spec = power_spectrogram(clip, config.window_ms)?;

    let frames: Vec<Vec<f64>> = match config.method.filter_scale() {
        None => spec
            .power
            .iter()
            .map(|row| row.iter().map(|&p| (p + LOG_FLOOR).ln()).collect())
            .collect(),
        Some(scale) => {
            let bank = build_filterbank(scale, config.filter_count, spec.fft_size, spec.sample_rate)?;
            let logs = log_filterbank_energies(&spec, &bank)?;
            if config.method.is_cepstral() {
                cepstra(&logs, config.coeff_count)?
            } else {
                logs
            }
        }
    };

    let n_frames = frames.len();
    let frame_width = frames.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(n_frames * frame_width);
    for frame in frames {
        values.extend(frame);
    }
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(FeatureVector {
        values,
        n_frames,
        frame_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_clip(len: usize, seed: u64) -> AudioClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioClip {
            samples: (0..len).map(|_| rng.random_range(-0.5..0.5)).collect(),
            sample_rate: 44100,
        }
    }

    #[test]
    fn config_rejects_off_grid_values() {
        let sr = 44100;
        assert!(SpectralConfig::new(FeatureMethod::Mfcc, 48, 64, 40, sr).is_err());
        assert!(SpectralConfig::new(FeatureMethod::Mfcc, 64, 100, 40, sr).is_err());
        assert!(SpectralConfig::new(FeatureMethod::Mfcc, 64, 64, 30, sr).is_err());
        assert!(SpectralConfig::new(FeatureMethod::Mfcc, 64, 64, 40, 0).is_err());
        assert!(SpectralConfig::new(FeatureMethod::Mfcc, 64, 64, 40, sr).is_ok());
    }

    #[test]
    fn method_names_round_trip() {
        for method in FeatureMethod::ALL {
            let name = method.to_string();
            assert_eq!(name.parse::<FeatureMethod>().unwrap(), method);
        }
        assert!("cqcc".parse::<FeatureMethod>().is_err());
    }

    #[test]
    fn default_analysis_window_feature_lengths() {
        // 1.8 s at 44.1 kHz has 109 frames with 64 ms windows.
        let sr = 44100;
        let clip_len = 79380;
        let cases = [
            (FeatureMethod::Spectrogram, 109 * 2049),
            (FeatureMethod::MelSpectrogram, 109 * 64),
            (FeatureMethod::Mfcc, 109 * 40),
            (FeatureMethod::Imfcc, 109 * 40),
            (FeatureMethod::Lfcc, 109 * 40),
        ];
        for (method, expected) in cases {
            let config = SpectralConfig::defaults(method, sr);
            assert_eq!(config.feature_len(clip_len).unwrap(), expected, "{method}");
            let fv = extract_features(&noise_clip(clip_len, 1), &config).unwrap();
            assert_eq!(fv.len(), expected, "{method}");
            assert_eq!(fv.n_frames, 109);
            assert!(fv.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn mel_defaults_give_expected_dimensions() {
        let config = SpectralConfig::defaults(FeatureMethod::MelSpectrogram, 44100);
        assert_eq!(config.feature_len(79380).unwrap(), 6976);
        let config = SpectralConfig::defaults(FeatureMethod::Mfcc, 44100);
        assert_eq!(config.feature_len(79380).unwrap(), 4360);
    }

    #[test]
    fn flattening_is_frame_major() {
        let clip = noise_clip(12000, 2);
        let config = SpectralConfig::defaults(FeatureMethod::MelSpectrogram, 44100);
        let fv = extract_features(&clip, &config).unwrap();
        let spec = power_spectrogram(&clip, 64).unwrap();
        let bank = build_filterbank(FilterScale::Mel, 64, spec.fft_size, 44100).unwrap();
        let logs = log_filterbank_energies(&spec, &bank).unwrap();
        assert_eq!(fv.frame_width, 64);
        for (f, frame) in logs.iter().enumerate() {
            for (b, &v) in frame.iter().enumerate() {
                assert_eq!(fv.values[f * 64 + b], v, "frame {f} band {b}");
            }
        }
    }

    #[test]
    fn sample_rate_mismatch_is_rejected() {
        let clip = AudioClip {
            samples: vec![0.0; 48000],
            sample_rate: 48000,
        };
        let config = SpectralConfig::defaults(FeatureMethod::Mfcc, 44100);
        assert!(matches!(
            extract_features(&clip, &config),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn extraction_is_deterministic() {
        let clip = noise_clip(30000, 3);
        let config = SpectralConfig::defaults(FeatureMethod::Imfcc, 44100);
        let a = extract_features(&clip, &config).unwrap();
        let b = extract_features(&clip, &config).unwrap();
        assert_eq!(a.values, b.values);
    }
}
