//! Triangular filterbanks on mel, inverse-mel, and linear frequency scales.

use super::stft::Spectrogram;
use crate::error::{Error, Result};

/// Floor added inside logs so silent bands stay finite.
pub const LOG_FLOOR: f64 = 1e-10;

/// Frequency warping used to place filter break points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterScale {
    /// Dense at low frequencies.
    Mel,
    /// Mel mirrored across the band: dense at high frequencies.
    InverseMel,
    /// Uniform spacing in Hz.
    Linear,
}

/// `2595 * log10(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// A bank of triangular filters over one-sided spectrum bins.
///
/// Each filter is stored as its support only: `start_bin` plus the weights
/// covering `start_bin..start_bin + weights.len()`. Triangles rise from one
/// break bin to the next and fall to the one after; every filter has unit
/// peak at its center bin.
pub struct Filterbank {
    rows: Vec<FilterRow>,
    n_spectrum_bins: usize,
    /// Center frequency of each filter in Hz (after bin quantization).
    pub centers_hz: Vec<f64>,
}

struct FilterRow {
    start_bin: usize,
    weights: Vec<f64>,
}

impl Filterbank {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Apply the bank to every frame: linear band energies, frames by filters.
    pub fn apply(&self, spec: &Spectrogram) -> Result<Vec<Vec<f64>>> {
        if spec.n_bins() != self.n_spectrum_bins {
            return Err(Error::Mismatch(format!(
                "filterbank built for {} spectrum bins, spectrogram has {}",
                self.n_spectrum_bins,
                spec.n_bins()
            )));
        }
        Ok(spec
            .power
            .iter()
            .map(|frame| {
                self.rows
                    .iter()
                    .map(|row| {
                        row.weights
                            .iter()
                            .zip(&frame[row.start_bin..row.start_bin + row.weights.len()])
                            .map(|(w, p)| w * p)
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }

    /// Materialize the bank as a dense matrix, filters by spectrum bins.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.n_spectrum_bins];
                dense[row.start_bin..row.start_bin + row.weights.len()]
                    .copy_from_slice(&row.weights);
                dense
            })
            .collect()
    }
}

/// Build `n_filters` triangular filters for spectra of `fft_size` at
/// `sample_rate`. Break points span 0 Hz to Nyquist on the chosen scale and
/// are quantized to the nearest spectrum bin; quantization must keep them
/// strictly increasing or the configuration is rejected.
pub fn build_filterbank(
    scale: FilterScale,
    n_filters: usize,
    fft_size: usize,
    sample_rate: u32,
) -> Result<Filterbank> {
    if n_filters == 0 {
        return Err(Error::Config("filter count must be positive".into()));
    }
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::Config(format!(
            "fft size must be a power of two >= 2, got {fft_size}"
        )));
    }
    let f_max = sample_rate as f64 / 2.0;
    let n_points = n_filters + 2;

    let points_hz: Vec<f64> = match scale {
        FilterScale::Linear => (0..n_points)
            .map(|i| f_max * i as f64 / (n_points - 1) as f64)
            .collect(),
        FilterScale::Mel => {
            let mel_max = hz_to_mel(f_max);
            (0..n_points)
                .map(|i| mel_to_hz(mel_max * i as f64 / (n_points - 1) as f64))
                .collect()
        }
        FilterScale::InverseMel => {
            let mel_max = hz_to_mel(f_max);
            // Mirror the mel grid so resolution concentrates at the top end.
            (0..n_points)
                .map(|i| {
                    let j = n_points - 1 - i;
                    f_max - mel_to_hz(mel_max * j as f64 / (n_points - 1) as f64)
                })
                .collect()
        }
    };

    let bin_width = sample_rate as f64 / fft_size as f64;
    let break_bins: Vec<usize> = points_hz
        .iter()
        .map(|&hz| (hz / bin_width).round() as usize)
        .collect();
    for w in break_bins.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config(format!(
                "{n_filters} {scale:?} filters collapse at fft size {fft_size}: \
                 break bins {} and {} collide",
                w[0], w[1]
            )));
        }
    }

    let n_spectrum_bins = fft_size / 2 + 1;
    debug_assert!(*break_bins.last().unwrap() < n_spectrum_bins);

    let mut rows = Vec::with_capacity(n_filters);
    let mut centers_hz = Vec::with_capacity(n_filters);
    for f in 0..n_filters {
        let (lo, mid, hi) = (break_bins[f], break_bins[f + 1], break_bins[f + 2]);
        let mut weights = Vec::with_capacity(hi - lo + 1);
        for k in lo..=hi {
            let w = if k <= mid {
                (k - lo) as f64 / (mid - lo) as f64
            } else {
                (hi - k) as f64 / (hi - mid) as f64
            };
            weights.push(w);
        }
        rows.push(FilterRow {
            start_bin: lo,
            weights,
        });
        centers_hz.push(mid as f64 * bin_width);
    }

    Ok(Filterbank {
        rows,
        n_spectrum_bins,
        centers_hz,
    })
}

/// Band energies through the bank, compressed as `ln(energy + LOG_FLOOR)`.
pub fn log_filterbank_energies(spec: &Spectrogram, bank: &Filterbank) -> Result<Vec<Vec<f64>>> {
    let mut frames = bank.apply(spec)?;
    for frame in &mut frames {
        for e in frame.iter_mut() {
            *e = (*e + LOG_FLOOR).ln();
        }
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::AudioClip;
    use crate::dsp::stft::power_spectrogram;

    #[test]
    fn mel_scale_anchor_points() {
        assert!(hz_to_mel(0.0).abs() < 1e-12);
        let expected = 2595.0 * 2f64.log10();
        assert!((hz_to_mel(700.0) - expected).abs() < 1e-9);
        for hz in [0.0, 123.4, 700.0, 8000.0, 22050.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_mel_break_points_mirror_mel() {
        // Spacing of inverse-mel points at the top equals mel spacing at the
        // bottom, reflected across the band.
        let f_max = 22050.0;
        let n_points = 66;
        let mel_max = hz_to_mel(f_max);
        let mel: Vec<f64> = (0..n_points)
            .map(|i| mel_to_hz(mel_max * i as f64 / (n_points - 1) as f64))
            .collect();
        let bank = build_filterbank(FilterScale::InverseMel, 64, 8192, 44100).unwrap();
        // First inverse-mel center sits near f_max reflected: f_max - mel[64].
        let expected_top = f_max - mel[1];
        let top_center = *bank.centers_hz.last().unwrap();
        assert!(
            (top_center - expected_top).abs() < 44100.0 / 8192.0,
            "top center {top_center} vs {expected_top}"
        );
    }

    #[test]
    fn every_grid_configuration_builds_distinct_filters() {
        for scale in [FilterScale::Mel, FilterScale::InverseMel, FilterScale::Linear] {
            for n_filters in [32, 64, 128] {
                for fft_size in [2048, 4096, 8192] {
                    let bank = build_filterbank(scale, n_filters, fft_size, 44100).unwrap();
                    assert_eq!(bank.len(), n_filters);
                    for (i, row) in bank.rows.iter().enumerate() {
                        let peak = row.weights.iter().cloned().fold(0.0, f64::max);
                        assert!(
                            (peak - 1.0).abs() < 1e-12,
                            "{scale:?} {n_filters}/{fft_size} filter {i} peak {peak}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn linear_filters_are_evenly_spaced() {
        let bank = build_filterbank(FilterScale::Linear, 32, 4096, 44100).unwrap();
        let spacing: Vec<f64> = bank.centers_hz.windows(2).map(|w| w[1] - w[0]).collect();
        let nominal = 22050.0 / 33.0;
        for s in spacing {
            assert!((s - nominal).abs() <= 44100.0 / 4096.0, "spacing {s}");
        }
    }

    #[test]
    fn band_energy_tracks_tone_location() {
        // A 300 Hz tone should land in a low mel band, an 18 kHz tone in a
        // high one, and the bank ordering should reflect that.
        let sr = 44100;
        let tone = |hz: f64| AudioClip {
            samples: (0..8820)
                .map(|i| (2.0 * std::f64::consts::PI * hz * i as f64 / sr as f64).sin())
                .collect(),
            sample_rate: sr,
        };
        let bank = build_filterbank(FilterScale::Mel, 64, 4096, sr).unwrap();
        let band_peak = |clip: &AudioClip| {
            let spec = power_spectrogram(clip, 64).unwrap();
            let bands = bank.apply(&spec).unwrap();
            let sums = (0..64).map(|b| bands.iter().map(|f| f[b]).sum::<f64>());
            sums.enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        let low = band_peak(&tone(300.0));
        let high = band_peak(&tone(18000.0));
        assert!(low < 10, "300 Hz peaked in band {low}");
        assert!(high > 54, "18 kHz peaked in band {high}");
    }

    #[test]
    fn log_energies_are_finite_on_silence() {
        let clip = AudioClip {
            samples: vec![0.0; 10000],
            sample_rate: 44100,
        };
        let spec = power_spectrogram(&clip, 64).unwrap();
        let bank = build_filterbank(FilterScale::Mel, 64, spec.fft_size, 44100).unwrap();
        let logs = log_filterbank_energies(&spec, &bank).unwrap();
        for frame in &logs {
            for &v in frame {
                assert!(v.is_finite());
                assert!((v - LOG_FLOOR.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dense_form_matches_sparse_application() {
        let clip = AudioClip {
            samples: (0..9000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0 - 0.5).collect(),
            sample_rate: 44100,
        };
        let spec = power_spectrogram(&clip, 32).unwrap();
        let bank = build_filterbank(FilterScale::InverseMel, 32, spec.fft_size, 44100).unwrap();
        let sparse = bank.apply(&spec).unwrap();
        let dense = bank.to_dense();
        for (f, frame) in spec.power.iter().enumerate() {
            for (b, dense_row) in dense.iter().enumerate() {
                let full: f64 = dense_row.iter().zip(frame).map(|(w, p)| w * p).sum();
                assert!((full - sparse[f][b]).abs() < 1e-12 * full.abs().max(1.0));
            }
        }
    }
}
