//! A complete, self-contained EEG seizure-prediction pipeline.
//!
//! The pipeline turns multi-channel EEG clips into windowed spectral and
//! statistical feature sequences, classifies them with a from-scratch stacked
//! bidirectional LSTM trained by backpropagation through time and Adam, and
//! evaluates the result with ROC curves and AUC. A deterministic synthetic
//! data generator makes the whole thing verifiable end to end without access
//! to clinical recordings.
//!
//! - [`dataset`]: clip data model, binary clip files, manifests, windowing,
//!   and the shuffled train/test split
//! - [`features`]: magnitude spectra, power spectral intensity over
//!   frequency bins, standard deviation, and z-score normalization
//! - [`neural`]: the bidirectional LSTM classifier, its gradients, Adam, and
//!   checkpointing
//! - [`eval`]: confusion counts, ROC curves, trapezoidal AUC
//! - [`synth`]: seeded synthetic EEG generation with a controllable
//!   preictal signature
//! - [`rng`]: the portable PRNG behind every random choice

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod neural;
pub mod rng;
pub mod synth;

mod fft;

pub use error::{Error, Result};
