//! Mel scales, triangular mel filterbanks and the mel-spectrogram.

use serde::{Deserialize, Serialize};

use crate::dsp::PowerSpectrogram;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMap, POWER_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MelScale {
    /// `2595 log10(1 + f / 700)`.
    Htk,
    /// Linear below 1 kHz (`3 f / 200`), logarithmic above.
    Slaney,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterNorm {
    None,
    /// Each triangle scaled to unit area over frequency in Hz.
    Area,
}

const SLANEY_F_SP: f64 = 200.0 / 3.0;
const SLANEY_MIN_LOG_HZ: f64 = 1000.0;
const SLANEY_MIN_LOG_MEL: f64 = SLANEY_MIN_LOG_HZ / SLANEY_F_SP;

fn slaney_logstep() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel(f: f64, scale: MelScale) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::Argument(format!("frequency {f} Hz is negative")));
    }
    Ok(match scale {
        MelScale::Htk => 2595.0 * (1.0 + f / 700.0).log10(),
        MelScale::Slaney if f < SLANEY_MIN_LOG_HZ => f / SLANEY_F_SP,
        MelScale::Slaney => SLANEY_MIN_LOG_MEL + (f / SLANEY_MIN_LOG_HZ).ln() / slaney_logstep(),
    })
}

pub fn mel_to_hz(m: f64, scale: MelScale) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::Argument(format!("mel value {m} is negative")));
    }
    Ok(match scale {
        MelScale::Htk => 700.0 * (10f64.powf(m / 2595.0) - 1.0),
        MelScale::Slaney if m < SLANEY_MIN_LOG_MEL => m * SLANEY_F_SP,
        MelScale::Slaney => SLANEY_MIN_LOG_HZ * (slaney_logstep() * (m - SLANEY_MIN_LOG_MEL)).exp(),
    })
}

/// `n_mels x (n_fft / 2 + 1)` triangular weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Vec<f64>,
    pub n_mels: usize,
    pub n_bins: usize,
    pub n_fft: usize,
    pub sample_rate: u32,
    pub scale: MelScale,
    pub fmin: f64,
    pub fmax: f64,
    pub norm: FilterNorm,
    /// `n_mels + 2` break frequencies in Hz; filter `i` rises from
    /// `break_hz[i]`, peaks at `break_hz[i + 1]` and falls to `break_hz[i + 2]`.
    pub break_hz: Vec<f64>,
    support: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n_bins..(i + 1) * self.n_bins]
    }

    /// Half-open range of bins with non-zero weight in row `i`.
    pub fn support(&self, i: usize) -> (usize, usize) {
        self.support[i]
    }

    /// Filter `i` weight at bin `k` before any normalization.
    pub fn triangle(&self, i: usize, freq: f64) -> f64 {
        let (lo, mid, hi) = (self.break_hz[i], self.break_hz[i + 1], self.break_hz[i + 2]);
        let rise = (freq - lo) / (mid - lo);
        let fall = (hi - freq) / (hi - mid);
        rise.min(fall).max(0.0)
    }

    /// `weights . power`, `n_mels x n_frames`, bin-major output.
    pub fn apply(&self, power: &PowerSpectrogram) -> Result<Vec<f64>> {
        if power.n_bins != self.n_bins || power.sample_rate != self.sample_rate {
            return Err(Error::Config(format!(
                "filterbank for {} bins @ {} Hz applied to {} bins @ {} Hz",
                self.n_bins, self.sample_rate, power.n_bins, power.sample_rate
            )));
        }
        let t = power.n_frames;
        let mut out = vec![0.0; self.n_mels * t];
        for i in 0..self.n_mels {
            let (lo, hi) = self.support[i];
            let dst = &mut out[i * t..(i + 1) * t];
            for k in lo..hi {
                let w = self.weights[i * self.n_bins + k];
                for (d, p) in dst.iter_mut().zip(power.row(k)) {
                    *d += w * p;
                }
            }
        }
        Ok(out)
    }
}

pub fn build_mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
    scale: MelScale,
    norm: FilterNorm,
) -> Result<MelFilterbank> {
    if n_mels == 0 {
        return Err(Error::Config("need at least one mel filter".into()));
    }
    if !(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate as f64 / 2.0) {
        return Err(Error::Config(format!("mel range {fmin}..{fmax} Hz is invalid at {sample_rate} Hz")));
    }
    let n_bins = n_fft / 2 + 1;
    let mel_lo = hz_to_mel(fmin, scale)?;
    let mel_hi = hz_to_mel(fmax, scale)?;
    let break_hz = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64, scale))
        .collect::<Result<Vec<f64>>>()?;

    let mut fb = MelFilterbank {
        weights: vec![0.0; n_mels * n_bins],
        n_mels,
        n_bins,
        n_fft,
        sample_rate,
        scale,
        fmin,
        fmax,
        norm,
        break_hz,
        support: Vec::with_capacity(n_mels),
    };
    for i in 0..n_mels {
        let scale_factor = match norm {
            FilterNorm::None => 1.0,
            FilterNorm::Area => 2.0 / (fb.break_hz[i + 2] - fb.break_hz[i]),
        };
        let mut lo = usize::MAX;
        let mut hi = 0;
        for k in 0..n_bins {
            let f = k as f64 * sample_rate as f64 / n_fft as f64;
            let w = fb.triangle(i, f) * scale_factor;
            if w > 0.0 {
                fb.weights[i * n_bins + k] = w;
                lo = lo.min(k);
                hi = k + 1;
            }
        }
        if lo == usize::MAX {
            return Err(Error::Config(format!(
                "mel filter {i} ({:.1}..{:.1} Hz) covers no FFT bin; too many filters for n_fft {n_fft}",
                fb.break_hz[i],
                fb.break_hz[i + 2]
            )));
        }
        fb.support.push((lo, hi));
    }
    Ok(fb)
}

/// Max-referenced dB mel-spectrogram: `10 log10(max(S, floor)) - max`.
pub fn mel_spectrogram(power: &PowerSpectrogram, fb: &MelFilterbank) -> Result<FeatureMap> {
    if fb.n_mels != FeatureKind::Melspec.rows() {
        return Err(Error::Config(format!("mel-spectrogram needs {} filters, got {}", FeatureKind::Melspec.rows(), fb.n_mels)));
    }
    let energies = fb.apply(power)?;
    let db: Vec<f64> = energies.iter().map(|&e| 10.0 * e.max(POWER_FLOOR).log10()).collect();
    let reference = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values = db.iter().map(|&d| (d - reference) as f32).collect();
    let frame_seconds = power.config.hop as f64 / power.sample_rate as f64;
    FeatureMap::new(FeatureKind::Melspec, power.n_frames, values, frame_seconds)
}
