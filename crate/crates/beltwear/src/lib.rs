//! Acoustic classification of abrasive belt wear on wide-belt sanders.
//!
//! The crate covers the full pipeline:
//!
//! * [`dataset`] — corpus metadata, WAV I/O, and a deterministic synthetic
//!   recording generator used in place of proprietary shop-floor audio.
//! * [`segmentation`] — locating the sanding event inside each recording and
//!   cutting fixed-length analysis windows from it.
//! * [`dsp`] — spectral features: power spectrogram, mel / inverse-mel /
//!   linear filterbank energies, and their cepstra.
//! * [`models`] — from-scratch classifiers (decision tree, random forest,
//!   k-nearest-neighbour, multilayer perceptron, random baseline).
//! * [`decomposition`] — PCA via one-sided Jacobi SVD, for 2-D scatter plots.
//! * [`evaluation`] — repetition-based train/test protocol, confusion
//!   matrices, parameter grid search, per-configuration specialist models.
//!
//! All randomness flows from caller-supplied seeds; every artifact the
//! pipeline writes is byte-stable across reruns on the same inputs.

pub mod dataset;
pub mod decomposition;
pub mod dsp;
pub mod error;
pub mod evaluation;
pub mod models;
pub mod segmentation;
pub mod util;

pub use dataset::{AudioClip, Material, Position, SandingRecordMeta};
pub use dsp::{FeatureMethod, SpectralConfig};
pub use error::{Error, Result};
