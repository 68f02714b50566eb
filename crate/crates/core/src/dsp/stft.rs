use std::cell::OnceCell;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::corpus::AudioClip;
use crate::dsp::{window, Fft, WindowKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Reflect-pad by `n_fft / 2` on both ends so frame `t` is centred at `t * hop`.
    pub centered: bool,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { n_fft: 2048, hop: 512, window: WindowKind::Hann, centered: true }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        check_geometry(self.n_fft, self.hop)
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }
}

fn check_geometry(n_fft: usize, hop: usize) -> Result<()> {
    if n_fft < 16 || !n_fft.is_power_of_two() {
        return Err(Error::Argument(format!("n_fft {n_fft} must be a power of two >= 16")));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::Argument(format!("hop {hop} must be in 1..={n_fft}")));
    }
    Ok(())
}

/// `1 + floor(len / hop)` when centred, `1 + floor((len - n_fft) / hop)` otherwise.
pub fn frame_count(len: usize, n_fft: usize, hop: usize, centered: bool) -> Result<usize> {
    check_geometry(n_fft, hop)?;
    if len == 0 {
        return Err(Error::Argument("cannot frame an empty signal".into()));
    }
    if centered {
        Ok(1 + len / hop)
    } else if len < n_fft {
        Err(Error::Argument(format!("signal of {len} samples is shorter than one {n_fft}-sample frame")))
    } else {
        Ok(1 + (len - n_fft) / hop)
    }
}

/// Index into `0..len` after reflecting `i` (which may be negative or past
/// the end) about the first and last samples, without repeating them.
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    (if m >= len as isize { period - m } else { m }) as usize
}

fn fill_frame(samples: &[f32], t: usize, n_fft: usize, hop: usize, centered: bool, out: &mut [f64]) {
    let start = t * hop;
    if centered {
        let offset = start as isize - (n_fft / 2) as isize;
        for (j, o) in out.iter_mut().enumerate() {
            *o = samples[reflect(offset + j as isize, samples.len())] as f64;
        }
    } else {
        for (o, &s) in out.iter_mut().zip(&samples[start..start + n_fft]) {
            *o = s as f64;
        }
    }
}

pub fn frame_signal(samples: &[f32], n_fft: usize, hop: usize, centered: bool) -> Result<Vec<Vec<f64>>> {
    let count = frame_count(samples.len(), n_fft, hop, centered)?;
    Ok((0..count)
        .map(|t| {
            let mut frame = vec![0.0; n_fft];
            fill_frame(samples, t, n_fft, hop, centered, &mut frame);
            frame
        })
        .collect())
}

/// Non-negative-frequency STFT bins, stored bin-major: `bins[k * n_frames + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub bins: Vec<Complex64>,
    pub n_bins: usize,
    pub n_frames: usize,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn at(&self, k: usize, t: usize) -> Complex64 {
        self.bins[k * self.n_frames + t]
    }
}

/// `|X[k, t]|^2`, bin-major like [`ComplexSpectrogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub power: Vec<f64>,
    pub n_bins: usize,
    pub n_frames: usize,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl PowerSpectrogram {
    pub fn at(&self, k: usize, t: usize) -> f64 {
        self.power[k * self.n_frames + t]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.power[k * self.n_frames..(k + 1) * self.n_frames]
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.config.n_fft as f64
    }

    /// Comma-separated dump, one line per frequency bin.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for k in 0..self.n_bins {
            let line: Vec<String> = self.row(k).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub fn stft(clip: &AudioClip, config: &StftConfig) -> Result<ComplexSpectrogram> {
    config.validate()?;
    let samples = clip.samples();
    let n_frames = frame_count(samples.len(), config.n_fft, config.hop, config.centered)?;
    let n_bins = config.n_bins();
    let fft = Fft::new(config.n_fft)?;
    let win = window(config.window, config.n_fft);
    let mut frame = vec![0.0; config.n_fft];
    let mut scratch = Vec::with_capacity(config.n_fft);
    let mut bins = vec![Complex64::new(0.0, 0.0); n_bins * n_frames];
    for t in 0..n_frames {
        fill_frame(samples, t, config.n_fft, config.hop, config.centered, &mut frame);
        frame.iter_mut().zip(&win).for_each(|(x, w)| *x *= w);
        let spectrum = fft.real_forward(&frame, &mut scratch);
        for (k, v) in spectrum.into_iter().enumerate() {
            bins[k * n_frames + t] = v;
        }
    }
    Ok(ComplexSpectrogram { bins, n_bins, n_frames, config: *config, sample_rate: clip.sample_rate() })
}

pub fn power_spectrogram(spec: &ComplexSpectrogram) -> PowerSpectrogram {
    PowerSpectrogram {
        power: spec.bins.iter().map(|z| z.norm_sqr()).collect(),
        n_bins: spec.n_bins,
        n_frames: spec.n_frames,
        config: spec.config,
        sample_rate: spec.sample_rate,
    }
}

/// One segment plus its lazily computed power spectrogram. Every extractor
/// that reads from the cache sees the same spectrogram value.
#[derive(Debug)]
pub struct SpectrumCache<'a> {
    clip: &'a AudioClip,
    config: StftConfig,
    power: OnceCell<PowerSpectrogram>,
}

impl<'a> SpectrumCache<'a> {
    pub fn new(clip: &'a AudioClip, config: StftConfig) -> Self {
        Self { clip, config, power: OnceCell::new() }
    }

    pub fn clip(&self) -> &AudioClip {
        self.clip
    }

    pub fn power(&self) -> Result<&PowerSpectrogram> {
        if let Some(p) = self.power.get() {
            return Ok(p);
        }
        let p = power_spectrogram(&stft(self.clip, &self.config)?);
        Ok(self.power.get_or_init(|| p))
    }

    pub fn is_computed(&self) -> bool {
        self.power.get().is_some()
    }
}
