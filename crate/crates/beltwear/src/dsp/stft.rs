//! Framing, windowing, and the one-sided power spectrogram.

use num_complex::Complex64;

use super::fft::RealFft;
use crate::dataset::AudioClip;
use crate::error::{Error, Result};

/// Periodic Hann window of length `len`: `0.5 * (1 - cos(2*pi*n/len))`.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    Ok((0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
        .collect())
}

/// Frame layout for a clip at a given analysis window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGeometry {
    /// Samples per frame: `round(window_ms * sample_rate / 1000)`.
    pub frame_len: usize,
    /// Hop between frame starts, a quarter frame rounded down.
    pub hop_len: usize,
    /// Number of full frames that fit in the clip.
    pub n_frames: usize,
    /// Zero-padded transform length: next power of two >= `frame_len`.
    pub fft_size: usize,
}

/// Compute the frame layout, or fail if the clip cannot hold one frame.
pub fn frame_geometry(window_ms: u32, sample_rate: u32, clip_len: usize) -> Result<FrameGeometry> {
    if window_ms == 0 || sample_rate == 0 {
        return Err(Error::Config(
            "window length and sample rate must be positive".into(),
        ));
    }
    let frame_len = (window_ms as f64 * sample_rate as f64 / 1000.0).round() as usize;
    let hop_len = frame_len / 4;
    if hop_len == 0 {
        return Err(Error::Config(format!(
            "window of {window_ms} ms at {sample_rate} Hz is too short to hop"
        )));
    }
    if clip_len < frame_len {
        return Err(Error::ClipTooShort {
            needed: frame_len,
            have: clip_len,
        });
    }
    let n_frames = (clip_len - frame_len) / hop_len + 1;
    let fft_size = frame_len.next_power_of_two();
    Ok(FrameGeometry {
        frame_len,
        hop_len,
        n_frames,
        fft_size,
    })
}

/// One-sided short-time power spectrogram.
///
/// Each row holds `fft_size/2 + 1` bins scaled so that the bins of a frame
/// sum to the windowed frame's time-domain energy (interior bins carry the
/// mirrored negative-frequency half).
pub struct Spectrogram {
    /// `n_frames` rows by `fft_size/2 + 1` columns.
    pub power: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub hop_len: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
    /// Center frequency of each bin in Hz.
    pub bin_hz: Vec<f64>,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.power.len()
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Time of the center of frame `i`, in seconds from clip start.
    pub fn frame_center_s(&self, i: usize) -> f64 {
        (i * self.hop_len + self.frame_len / 2) as f64 / self.sample_rate as f64
    }
}

/// Hann-windowed power spectrogram of `clip` at `window_ms`.
pub fn power_spectrogram(clip: &AudioClip, window_ms: u32) -> Result<Spectrogram> {
    let geo = frame_geometry(window_ms, clip.sample_rate, clip.samples.len())?;
    let window = hann_window(geo.frame_len)?;
    let plan = RealFft::new(geo.fft_size)?;

    let n_bins = geo.fft_size / 2 + 1;
    let mut padded = vec![0.0; geo.fft_size];
    let mut scratch = vec![Complex64::new(0.0, 0.0); geo.fft_size / 2];
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n_bins];

    let mut power = Vec::with_capacity(geo.n_frames);
    let scale = 1.0 / geo.fft_size as f64;
    for i in 0..geo.n_frames {
        let start = i * geo.hop_len;
        for (j, w) in window.iter().enumerate() {
            padded[j] = clip.samples[start + j] * w;
        }
        // Tail beyond frame_len stays zero from initialization; no frame can
        // shrink it, so only the windowed region needs rewriting.
        plan.forward(&padded, &mut scratch, &mut spectrum);
        let mut row = Vec::with_capacity(n_bins);
        for (k, v) in spectrum.iter().enumerate() {
            let doubling = if k == 0 || k == n_bins - 1 { 1.0 } else { 2.0 };
            row.push(doubling * v.norm_sqr() * scale);
        }
        power.push(row);
    }

    let bin_hz = (0..n_bins)
        .map(|k| k as f64 * clip.sample_rate as f64 / geo.fft_size as f64)
        .collect();

    Ok(Spectrogram {
        power,
        frame_len: geo.frame_len,
        hop_len: geo.hop_len,
        fft_size: geo.fft_size,
        sample_rate: clip.sample_rate,
        bin_hz,
    })
}
