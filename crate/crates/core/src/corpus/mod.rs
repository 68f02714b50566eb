//! Corpus ingestion: audio clips, YMIR-style labels, segmentation,
//! stratified splits, synthetic corpora and annotator agreement.

mod kappa;
mod label;
mod manifest;
mod resample;
mod segment;
mod split;
mod synth;
mod wav;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kappa::{fleiss_kappa, AnnotationMatrix, KappaBreakdown};
pub use label::{format_label, parse_label, LabelFields};
pub use manifest::{Manifest, TrackRecord, MANIFEST_FILE};
pub use resample::{Resampler, KAISER_BETA, HALF_TAPS};
pub use segment::{segment, segment_fixed, SegmentationReport, CLIP_SECONDS, SEGMENTS_PER_CLIP, SEGMENT_SECONDS};
pub use split::{stratified_split, SplitAssignment, SplitMode};
pub use synth::{default_recipes, generate_synthetic_corpus, render_clip, SignalRecipe};
pub use wav::{load_wav, read_wav, write_wav_pcm16};

/// Working sample rate of the whole pipeline.
pub const TARGET_RATE: u32 = 22_050;

/// A mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting empty buffers, non-finite samples and a zero rate.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        if sample_rate == 0 {
            return Err(Error::Argument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Argument(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }
}

/// The five genres, with stable ids 0..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenreLabel {
    Sanaani,
    Hadhrami,
    Lahji,
    Tihami,
    Adeni,
}

impl GenreLabel {
    pub const ALL: [GenreLabel; 5] = [
        GenreLabel::Sanaani,
        GenreLabel::Hadhrami,
        GenreLabel::Lahji,
        GenreLabel::Tihami,
        GenreLabel::Adeni,
    ];
    pub const COUNT: usize = 5;

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GenreLabel::Sanaani => "Sanaani",
            GenreLabel::Hadhrami => "Hadhrami",
            GenreLabel::Lahji => "Lahji",
            GenreLabel::Tihami => "Tihami",
            GenreLabel::Adeni => "Adeni",
        }
    }
}

impl fmt::Display for GenreLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenreLabel {
    type Err = Error;

    /// Case-insensitive; apostrophes are ignored so "Sana'ani" is accepted.
    fn from_str(s: &str) -> Result<Self> {
        let folded: String = s
            .chars()
            .filter(|c| *c != '\'' && *c != '\u{2019}')
            .flat_map(char::to_lowercase)
            .collect();
        GenreLabel::ALL
            .into_iter()
            .find(|g| g.name().to_lowercase() == folded)
            .ok_or_else(|| Error::Label(format!("unknown genre `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genre_ids_round_trip() {
        for (i, g) in GenreLabel::ALL.iter().enumerate() {
            assert_eq!(g.id(), i);
            assert_eq!(GenreLabel::from_id(i), Some(*g));
            assert_eq!(g.name().parse::<GenreLabel>().unwrap(), *g);
            let json = serde_json::to_string(g).unwrap();
            assert_eq!(serde_json::from_str::<GenreLabel>(&json).unwrap(), *g);
        }
        assert_eq!(GenreLabel::from_id(5), None);
    }

    #[test]
    fn genre_parse_is_lenient_about_case_and_apostrophes() {
        assert_eq!("sana'ani".parse::<GenreLabel>().unwrap(), GenreLabel::Sanaani);
        assert_eq!("ADENI".parse::<GenreLabel>().unwrap(), GenreLabel::Adeni);
        assert!(matches!("Jazz".parse::<GenreLabel>(), Err(Error::Label(_))));
    }

    #[test]
    fn clip_rejects_bad_input() {
        assert!(matches!(AudioClip::new(vec![], 22050), Err(Error::EmptyAudio)));
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        assert!(AudioClip::new(vec![f32::NAN], 8000).is_err());
        let clip = AudioClip::new(vec![0.0; 22050], 22050).unwrap();
        assert_eq!(clip.duration_seconds(), 1.0);
    }
}
