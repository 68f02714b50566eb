//! Band-limited rational resampling with a Kaiser-windowed sinc kernel.
//!
//! The rate ratio is reduced to `up / down`. Output sample `j` sits at input
//! position `j * down / up`; its value is a dot product of the 2 x 64
//! surrounding input samples with one of `up` precomputed phase filters.

use crate::error::{Error, Result};

/// Kaiser window shape parameter.
pub const KAISER_BETA: f64 = 12.0;
/// Taps on each side of the interpolation instant, per phase.
pub const HALF_TAPS: usize = 64;

const MAX_TABULATED_PHASES: usize = 4096;

#[derive(Debug, Clone)]
pub struct Resampler {
    up: u64,
    down: u64,
    cutoff: f64,
    // `up` rows of 2 * HALF_TAPS taps, empty when phases are computed on demand.
    table: Vec<f64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= half_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

impl Resampler {
    pub fn new(from_rate: u32, to_rate: u32) -> Result<Self> {
        if from_rate == 0 || to_rate == 0 {
            return Err(Error::Argument("sample rates must be positive".into()));
        }
        let g = gcd(from_rate as u64, to_rate as u64);
        let up = to_rate as u64 / g;
        let down = from_rate as u64 / g;
        let cutoff = (up as f64 / down as f64).min(1.0);
        let mut resampler = Self { up, down, cutoff, table: Vec::new() };
        if up as usize <= MAX_TABULATED_PHASES && up != down {
            let mut table = Vec::with_capacity(up as usize * 2 * HALF_TAPS);
            for phase in 0..up {
                table.extend(resampler.phase_taps(phase));
            }
            resampler.table = table;
        }
        Ok(resampler)
    }

    /// Reduced `(up, down)` ratio.
    pub fn ratio(&self) -> (u64, u64) {
        (self.up, self.down)
    }

    /// Taps for the input samples `n0 - HALF_TAPS + 1 ..= n0 + HALF_TAPS`, where
    /// the output instant is `n0 + phase / up`. Normalized to unit DC gain.
    fn phase_taps(&self, phase: u64) -> Vec<f64> {
        let frac = phase as f64 / self.up as f64;
        let i0_beta = bessel_i0(KAISER_BETA);
        let half = HALF_TAPS as f64;
        let mut taps: Vec<f64> = (0..2 * HALF_TAPS)
            .map(|i| {
                // offset from the output instant to this tap, in input samples
                let tau = (HALF_TAPS as f64 - 1.0 - i as f64) + frac;
                let x = tau / half;
                let window = if x.abs() >= 1.0 {
                    0.0
                } else {
                    bessel_i0(KAISER_BETA * (1.0 - x * x).sqrt()) / i0_beta
                };
                self.cutoff * sinc(self.cutoff * tau) * window
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        if sum.abs() > 1e-12 {
            taps.iter_mut().for_each(|t| *t /= sum);
        }
        taps
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        ((input_len as u64 * self.up + self.down / 2) / self.down) as usize
    }

    pub fn process(&self, input: &[f32]) -> Vec<f32> {
        if self.up == self.down {
            return input.to_vec();
        }
        let n_out = self.output_len(input.len());
        let width = 2 * HALF_TAPS;
        let mut scratch;
        let mut out = Vec::with_capacity(n_out);
        for j in 0..n_out as u64 {
            let pos = j * self.down;
            let n0 = (pos / self.up) as i64;
            let phase = pos % self.up;
            let taps: &[f64] = if self.table.is_empty() {
                scratch = self.phase_taps(phase);
                &scratch
            } else {
                let start = phase as usize * width;
                &self.table[start..start + width]
            };
            let first = n0 - HALF_TAPS as i64 + 1;
            let mut acc = 0.0f64;
            for (i, &t) in taps.iter().enumerate() {
                let idx = first + i as i64;
                if idx >= 0 && (idx as usize) < input.len() {
                    acc += t * input[idx as usize] as f64;
                }
            }
            out.push(acc.clamp(-1.0, 1.0) as f32);
        }
        out
    }
}
