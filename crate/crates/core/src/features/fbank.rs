//! Log mel filterbank energies on short frames, computed independently of
//! the shared spectrogram: pre-emphasis, 25 ms rectangular frames every
//! 10 ms, 512-point periodogram, 26 HTK triangles over 0..Nyquist.

use serde::{Deserialize, Serialize};

use crate::corpus::AudioClip;
use crate::dsp::Fft;
use crate::error::{Error, Result};
use crate::features::{hz_to_mel, mel_to_hz, FeatureKind, FeatureMap, MelScale, POWER_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbankConfig {
    pub win_seconds: f64,
    pub step_seconds: f64,
    pub n_filters: usize,
    pub n_fft: usize,
    pub preemphasis: f64,
}

impl Default for FbankConfig {
    fn default() -> Self {
        Self { win_seconds: 0.025, step_seconds: 0.01, n_filters: 26, n_fft: 512, preemphasis: 0.97 }
    }
}

/// Round half to even, so 551.25 -> 551 and 220.5 -> 220.
fn round_half_even(x: f64) -> usize {
    let r = x.round();
    let r = if (x - x.trunc()).abs() == 0.5 && (r as i64) % 2 != 0 { r - 1.0 } else { r };
    r as usize
}

#[derive(Debug, Clone)]
pub struct PsfFilterbank {
    config: FbankConfig,
    sample_rate: u32,
    frame_len: usize,
    frame_step: usize,
    /// `n_filters x (n_fft / 2 + 1)`.
    weights: Vec<f64>,
    /// Apex bin of each filter.
    centers: Vec<usize>,
    fft: Fft,
}

impl PsfFilterbank {
    pub fn new(config: FbankConfig, sample_rate: u32) -> Result<Self> {
        let frame_len = round_half_even(config.win_seconds * sample_rate as f64);
        let frame_step = round_half_even(config.step_seconds * sample_rate as f64);
        if frame_len == 0 || frame_step == 0 || config.n_filters == 0 {
            return Err(Error::Config(format!("degenerate filterbank framing {config:?}")));
        }
        let fft = Fft::new(config.n_fft)?;
        let n_bins = config.n_fft / 2 + 1;
        let high = hz_to_mel(sample_rate as f64 / 2.0, MelScale::Htk)?;
        let bins = (0..config.n_filters + 2)
            .map(|i| {
                let hz = mel_to_hz(high * i as f64 / (config.n_filters + 1) as f64, MelScale::Htk)?;
                Ok(((config.n_fft + 1) as f64 * hz / sample_rate as f64).floor() as usize)
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut weights = vec![0.0; config.n_filters * n_bins];
        for j in 0..config.n_filters {
            let (lo, mid, hi) = (bins[j], bins[j + 1], bins[j + 2]);
            for i in lo..mid {
                weights[j * n_bins + i] = (i - lo) as f64 / (mid - lo) as f64;
            }
            for i in mid..hi.min(n_bins) {
                weights[j * n_bins + i] = (hi - i) as f64 / (hi - mid) as f64;
            }
        }
        let centers = bins[1..=config.n_filters].to_vec();
        Ok(Self { config, sample_rate, frame_len, frame_step, weights, centers, fft })
    }

    pub fn config(&self) -> &FbankConfig {
        &self.config
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn frame_step(&self) -> usize {
        self.frame_step
    }

    pub fn center_bin(&self, filter: usize) -> usize {
        self.centers[filter]
    }

    pub fn frame_count(&self, len: usize) -> Result<usize> {
        if len < self.frame_len {
            return Err(Error::Argument(format!("segment of {len} samples is shorter than one {}-sample frame", self.frame_len)));
        }
        Ok(1 + (len - self.frame_len) / self.frame_step)
    }
}

pub fn logfbank_energies(segment: &AudioClip, fb: &PsfFilterbank) -> Result<FeatureMap> {
    if segment.sample_rate() != fb.sample_rate {
        return Err(Error::Argument(format!("segment at {} Hz, filterbank built for {} Hz", segment.sample_rate(), fb.sample_rate)));
    }
    let x = segment.samples();
    let n_frames = fb.frame_count(x.len())?;
    let coeff = fb.config.preemphasis;
    let emphasized: Vec<f64> = (0..x.len())
        .map(|i| if i == 0 { x[0] as f64 } else { x[i] as f64 - coeff * x[i - 1] as f64 })
        .collect();
    let n_fft = fb.config.n_fft;
    let n_bins = n_fft / 2 + 1;
    let n_filters = fb.config.n_filters;
    // Frames longer than the FFT are cropped to its size.
    let used = fb.frame_len.min(n_fft);
    let mut scratch = Vec::with_capacity(n_fft);
    let mut values = vec![0.0f32; n_filters * n_frames];
    for t in 0..n_frames {
        let start = t * fb.frame_step;
        let spectrum = fb.fft.real_forward(&emphasized[start..start + used], &mut scratch);
        let power: Vec<f64> = spectrum.iter().map(|z| z.norm_sqr() / n_fft as f64).collect();
        for j in 0..n_filters {
            let w = &fb.weights[j * n_bins..(j + 1) * n_bins];
            let e: f64 = w.iter().zip(&power).map(|(a, b)| a * b).sum();
            values[j * n_frames + t] = e.max(POWER_FLOOR).ln() as f32;
        }
    }
    let frame_seconds = fb.frame_step as f64 / fb.sample_rate as f64;
    FeatureMap::new(FeatureKind::Filterbank, n_frames, values, frame_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_at_22050() {
        let fb = PsfFilterbank::new(FbankConfig::default(), 22050).unwrap();
        assert_eq!((fb.frame_len(), fb.frame_step()), (551, 220));
        assert_eq!(fb.frame_count(132_300).unwrap(), 599);
        assert!(fb.frame_count(550).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_even(551.25), 551);
        assert_eq!(round_half_even(220.5), 220);
        assert_eq!(round_half_even(221.5), 222);
        assert_eq!(round_half_even(400.0), 400);
    }

    #[test]
    fn silence_is_uniform_floor() {
        let fb = PsfFilterbank::new(FbankConfig::default(), 22050).unwrap();
        let clip = AudioClip::new(vec![0.0; 22050], 22050).unwrap();
        let map = logfbank_energies(&clip, &fb).unwrap();
        let floor = POWER_FLOOR.ln() as f32;
        assert!(map.values.iter().all(|&v| v == floor));
    }

    #[test]
    fn short_segment_is_rejected() {
        let fb = PsfFilterbank::new(FbankConfig::default(), 22050).unwrap();
        let clip = AudioClip::new(vec![0.1; 500], 22050).unwrap();
        assert!(matches!(logfbank_energies(&clip, &fb), Err(Error::Argument(_))));
    }

    #[test]
    fn tone_at_filter_center_wins() {
        let fb = PsfFilterbank::new(FbankConfig::default(), 22050).unwrap();
        for filter in [3, 10, 20] {
            let bin = fb.center_bin(filter);
            let f = bin as f64 * 22050.0 / 512.0;
            let x: Vec<f32> = (0..22050)
                .map(|n| (0.5 * (std::f64::consts::TAU * f * n as f64 / 22050.0).sin()) as f32)
                .collect();
            let map = logfbank_energies(&AudioClip::new(x, 22050).unwrap(), &fb).unwrap();
            for t in 0..map.cols {
                let col = map.column(t);
                let arg = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
                assert_eq!(arg, filter, "frame {t}");
            }
        }
    }
}
