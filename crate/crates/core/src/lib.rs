//! # ymir
//!
//! A benchmark engine for music-genre classification on five-class corpora
//! laid out like the Yemeni YMIR collection (Sanaani, Hadhrami, Lahji,
//! Tihami, Adeni).
//!
//! The pipeline runs end to end on a single CPU:
//!
//! ```text
//! WAV -> resample/downmix -> 30 s -> 5 x 6 s segments -> power spectrogram (once)
//!     -> chroma | filterbank | mel | mfcc13/20/40 -> normalize -> CNN -> metrics
//! ```
//!
//! - [`corpus`]: WAV ingestion, label parsing, segmentation, stratified splits,
//!   synthetic corpora and Fleiss' kappa.
//! - [`dsp`]: framing, windowing, radix-2 FFT and the shared power spectrogram.
//! - [`features`]: the six time-frequency representations and normalization.
//! - [`autodiff`]: a small tape-based tensor engine with the CNN layer set and Adam.
//! - [`models`]: YMCM and the four comparison architectures.
//! - [`train_eval`]: training with early stopping, confusion matrices, weighted metrics.
//! - [`experiment`]: single runs, the 6 x 5 grid, feature cache, reports and plots.
//!
//! Each capability has a runnable program under `examples/`.

pub mod autodiff;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod features;
pub mod models;
pub mod train_eval;

pub use error::{Error, ErrorClass, Result};
