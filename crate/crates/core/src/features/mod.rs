//! The six time-frequency representations fed to the classifiers, plus
//! train-split normalization and the `YMFT` binary container.
//!
//! Mel, chroma and MFCC maps all read the same cached power spectrogram of a
//! segment; log filterbank energies use their own 25 ms / 10 ms framing.

mod chroma;
mod container;
mod fbank;
mod mel;
mod mfcc;
mod normalize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AudioClip, TARGET_RATE};
use crate::dsp::{SpectrumCache, StftConfig};
use crate::error::{Error, Result};

pub use chroma::{chroma, pitch_class, PITCH_CLASSES};
pub use container::{read_feature_map, read_feature_maps, write_feature_map, write_feature_maps, MAGIC as YMFT_MAGIC};
pub use fbank::{logfbank_energies, FbankConfig, PsfFilterbank};
pub use mel::{build_mel_filterbank, hz_to_mel, mel_spectrogram, mel_to_hz, FilterNorm, MelFilterbank, MelScale};
pub use mfcc::{dct_matrix, log_mel, mfcc};
pub use normalize::{apply_normalizer, fit_normalizer, NormalizationStats, STD_FLOOR};

/// Floor applied to every power value before a logarithm.
pub const POWER_FLOOR: f64 = 1e-10;
pub const N_MELS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Chroma,
    Filterbank,
    Melspec,
    Mfcc13,
    Mfcc20,
    Mfcc40,
}

impl FeatureKind {
    /// Report order.
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Chroma,
        FeatureKind::Filterbank,
        FeatureKind::Melspec,
        FeatureKind::Mfcc13,
        FeatureKind::Mfcc20,
        FeatureKind::Mfcc40,
    ];

    pub fn rows(self) -> usize {
        match self {
            FeatureKind::Chroma => 12,
            FeatureKind::Filterbank => 26,
            FeatureKind::Melspec => N_MELS,
            FeatureKind::Mfcc13 => 13,
            FeatureKind::Mfcc20 => 20,
            FeatureKind::Mfcc40 => 40,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Identifier used on the command line and in file names.
    pub fn id(self) -> &'static str {
        match self {
            FeatureKind::Chroma => "chroma",
            FeatureKind::Filterbank => "filterbank",
            FeatureKind::Melspec => "melspec",
            FeatureKind::Mfcc13 => "mfcc13",
            FeatureKind::Mfcc20 => "mfcc20",
            FeatureKind::Mfcc40 => "mfcc40",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            FeatureKind::Chroma => "Chroma",
            FeatureKind::Filterbank => "FilterBanks",
            FeatureKind::Melspec => "Mel-Spectrogram",
            FeatureKind::Mfcc13 => "MFCC13",
            FeatureKind::Mfcc20 => "MFCC20",
            FeatureKind::Mfcc40 => "MFCC40",
        }
    }

    pub fn mfcc_coefficients(self) -> Option<usize> {
        match self {
            FeatureKind::Mfcc13 => Some(13),
            FeatureKind::Mfcc20 => Some(20),
            FeatureKind::Mfcc40 => Some(40),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.id() == lower || k.display_name().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::Config(format!("unknown feature kind `{s}`")))
    }
}

/// A `rows x cols` (frequency-like x time) matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
    /// Hop between consecutive columns, in seconds.
    pub frame_seconds: f64,
}

impl FeatureMap {
    pub fn new(kind: FeatureKind, cols: usize, values: Vec<f32>, frame_seconds: f64) -> Result<Self> {
        let rows = kind.rows();
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{kind} map needs {rows} x {cols} = {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{kind} map contains non-finite values")));
        }
        Ok(Self { kind, rows, cols, values, frame_seconds })
    }

    pub fn at(&self, r: usize, c: usize) -> f32 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    /// Column `c` as a vector over rows.
    pub fn column(&self, c: usize) -> Vec<f32> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    pub fn bin_labels(&self) -> Vec<String> {
        match self.kind {
            FeatureKind::Chroma => PITCH_CLASSES.iter().map(|s| s.to_string()).collect(),
            FeatureKind::Melspec => (0..self.rows).map(|i| format!("mel{i}")).collect(),
            FeatureKind::Filterbank => (0..self.rows).map(|i| format!("fbank{i}")).collect(),
            _ => (0..self.rows).map(|i| format!("c{i}")).collect(),
        }
    }
}

/// Holds the filterbanks and framing for all six extractors at one sample rate.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    stft: StftConfig,
    sample_rate: u32,
    mel: MelFilterbank,
    fbank: PsfFilterbank,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new(TARGET_RATE, StftConfig::default()).expect("default extraction parameters are valid")
    }
}

impl FeatureExtractor {
    pub fn new(sample_rate: u32, stft: StftConfig) -> Result<Self> {
        stft.validate()?;
        let mel = build_mel_filterbank(
            N_MELS,
            stft.n_fft,
            sample_rate,
            0.0,
            sample_rate as f64 / 2.0,
            MelScale::Slaney,
            FilterNorm::Area,
        )?;
        let fbank = PsfFilterbank::new(FbankConfig::default(), sample_rate)?;
        Ok(Self { stft, sample_rate, mel, fbank })
    }

    pub fn stft_config(&self) -> &StftConfig {
        &self.stft
    }

    pub fn mel_filterbank(&self) -> &MelFilterbank {
        &self.mel
    }

    /// Stable description of every parameter that affects extracted values.
    pub fn fingerprint(&self) -> String {
        format!(
            "sr={};n_fft={};hop={};window={:?};centered={};n_mels={};mel=slaney/area;floor={POWER_FLOOR:e};fbank={:?}",
            self.sample_rate, self.stft.n_fft, self.stft.hop, self.stft.window, self.stft.centered, N_MELS, self.fbank.config()
        )
    }

    fn check_rate(&self, clip: &AudioClip) -> Result<()> {
        if clip.sample_rate() != self.sample_rate {
            return Err(Error::Argument(format!(
                "segment at {} Hz given to a {} Hz extractor",
                clip.sample_rate(),
                self.sample_rate
            )));
        }
        Ok(())
    }

    /// Extracts one kind, using (and filling) the segment's spectrum cache.
    pub fn extract_cached(&self, kind: FeatureKind, cache: &SpectrumCache<'_>) -> Result<FeatureMap> {
        self.check_rate(cache.clip())?;
        match kind {
            FeatureKind::Filterbank => logfbank_energies(cache.clip(), &self.fbank),
            FeatureKind::Melspec => mel_spectrogram(cache.power()?, &self.mel),
            FeatureKind::Chroma => chroma(cache.power()?),
            k => mfcc(cache.power()?, &self.mel, k.mfcc_coefficients().expect("mfcc kind")),
        }
    }

    pub fn extract(&self, kind: FeatureKind, segment: &AudioClip) -> Result<FeatureMap> {
        let cache = SpectrumCache::new(segment, self.stft);
        self.extract_cached(kind, &cache)
    }

    /// Extracts several kinds from one segment, computing its power
    /// spectrogram at most once.
    pub fn extract_many(&self, kinds: &[FeatureKind], segment: &AudioClip) -> Result<Vec<FeatureMap>> {
        let cache = SpectrumCache::new(segment, self.stft);
        kinds.iter().map(|&k| self.extract_cached(k, &cache)).collect()
    }
}
