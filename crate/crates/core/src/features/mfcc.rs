use std::f64::consts::PI;

use crate::dsp::PowerSpectrogram;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMap, MelFilterbank, POWER_FLOOR};

/// Orthonormal DCT-II basis, `n_out x n_in`, row `k` is coefficient `k`.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Vec<f64> {
    let mut d = vec![0.0; n_out * n_in];
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / n_in as f64).sqrt() } else { (2.0 / n_in as f64).sqrt() };
        for n in 0..n_in {
            d[k * n_in + n] = scale * (PI * k as f64 * (2 * n + 1) as f64 / (2 * n_in) as f64).cos();
        }
    }
    d
}

/// Un-referenced dB mel energies, `n_mels x n_frames`.
pub fn log_mel(power: &PowerSpectrogram, fb: &MelFilterbank) -> Result<Vec<f64>> {
    Ok(fb.apply(power)?.into_iter().map(|e| 10.0 * e.max(POWER_FLOOR).log10()).collect())
}

/// First `n_coeff` orthonormal DCT-II coefficients of each frame's log-mel vector.
pub fn mfcc(power: &PowerSpectrogram, fb: &MelFilterbank, n_coeff: usize) -> Result<FeatureMap> {
    let kind = match n_coeff {
        13 => FeatureKind::Mfcc13,
        20 => FeatureKind::Mfcc20,
        40 => FeatureKind::Mfcc40,
        _ => return Err(Error::Argument(format!("unsupported MFCC count {n_coeff}; use 13, 20 or 40"))),
    };
    if n_coeff > fb.n_mels {
        return Err(Error::Argument(format!("{n_coeff} coefficients from {} mel bands", fb.n_mels)));
    }
    let logmel = log_mel(power, fb)?;
    let m = fb.n_mels;
    let t = power.n_frames;
    let basis = dct_matrix(n_coeff, m);
    let mut values = vec![0.0f32; n_coeff * t];
    let mut frame = vec![0.0; m];
    for c in 0..t {
        for (b, f) in frame.iter_mut().enumerate() {
            *f = logmel[b * t + c];
        }
        for k in 0..n_coeff {
            let row = &basis[k * m..(k + 1) * m];
            let acc: f64 = row.iter().zip(&frame).map(|(d, x)| d * x).sum();
            values[k * t + c] = acc as f32;
        }
    }
    let frame_seconds = power.config.hop as f64 / power.sample_rate as f64;
    FeatureMap::new(kind, t, values, frame_seconds)
}
