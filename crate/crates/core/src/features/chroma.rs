use crate::dsp::PowerSpectrogram;
use crate::error::Result;
use crate::features::{FeatureKind, FeatureMap};

pub const PITCH_CLASSES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Lowest frequency folded into a pitch class (A0).
const MIN_FREQ: f64 = 27.5;

/// Pitch class of `freq` with C = 0, by nearest equal-tempered semitone to A440.
pub fn pitch_class(freq: f64) -> usize {
    let semitones_from_a = (12.0 * (freq / 440.0).log2()).round() as i64;
    (semitones_from_a + 9).rem_euclid(12) as usize
}

/// Folds every bin above 27.5 Hz into its pitch class and scales each frame
/// by its maximum; all-zero frames stay zero.
pub fn chroma(power: &PowerSpectrogram) -> Result<FeatureMap> {
    let t = power.n_frames;
    let mut acc = vec![0.0f64; 12 * t];
    for k in 1..power.n_bins {
        let f = power.bin_frequency(k);
        if f < MIN_FREQ {
            continue;
        }
        let class = pitch_class(f);
        for (a, p) in acc[class * t..(class + 1) * t].iter_mut().zip(power.row(k)) {
            *a += p;
        }
    }
    for c in 0..t {
        let max = (0..12).map(|r| acc[r * t + c]).fold(0.0, f64::max);
        if max > 0.0 {
            for r in 0..12 {
                acc[r * t + c] /= max;
            }
        }
    }
    let values = acc.into_iter().map(|v| v as f32).collect();
    let frame_seconds = power.config.hop as f64 / power.sample_rate as f64;
    FeatureMap::new(FeatureKind::Chroma, t, values, frame_seconds)
}
