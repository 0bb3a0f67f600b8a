//! Spectral feature extraction.
//!
//! The chain is: Hann-windowed STFT with a quarter-frame hop, one-sided
//! power spectrogram, optionally a triangular filterbank (mel, inverse-mel,
//! or linear), log compression, and optionally an orthonormal DCT-II. Each
//! stage is public so callers can stop anywhere along the chain.

pub mod cepstra;
pub mod fft;
pub mod features;
pub mod filterbank;
pub mod stft;

pub use cepstra::{cepstra as cepstra_frames, dct_ii_matrix};
pub use features::{
    extract_features, FeatureMethod, FeatureVector, SpectralConfig, COEFF_COUNT_CHOICES,
    FILTER_COUNT_CHOICES, WINDOW_MS_CHOICES,
};
pub use filterbank::{
    build_filterbank, hz_to_mel, log_filterbank_energies, mel_to_hz, FilterScale, Filterbank,
    LOG_FLOOR,
};
pub use stft::{frame_geometry, hann_window, power_spectrogram, FrameGeometry, Spectrogram};
