use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Hamming,
    Rectangular,
}

/// Periodic (DFT-even) window of length `n`.
pub fn window(kind: WindowKind, n: usize) -> Vec<f64> {
    let n_f = n as f64;
    (0..n)
        .map(|i| {
            let c = (TAU * i as f64 / n_f).cos();
            match kind {
                WindowKind::Hann => 0.5 - 0.5 * c,
                WindowKind::Hamming => 0.54 - 0.46 * c,
                WindowKind::Rectangular => 1.0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_is_periodic() {
        let w = window(WindowKind::Hann, 8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        // periodic: w[k] == w[n-k]
        for k in 1..8 {
            assert!((w[k] - w[8 - k]).abs() < 1e-15);
        }
    }

    #[test]
    fn hamming_and_rectangular() {
        assert!((window(WindowKind::Hamming, 4)[0] - 0.08).abs() < 1e-15);
        assert!(window(WindowKind::Rectangular, 5).iter().all(|&v| v == 1.0));
    }
}
