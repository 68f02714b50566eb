use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iterative in-place radix-2 FFT with precomputed twiddles and
/// bit-reversal permutation.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Argument(format!("FFT size {n} is not a power of two >= 2")));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -std::f64::consts::TAU * k as f64 / n as f64))
            .collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward transform, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
    pub fn process(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length must equal FFT size");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.n {
            let half = size / 2;
            let stride = self.n / size;
            for start in (0..self.n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    /// Transform of a real sequence; returns bins `0..=N/2`.
    pub fn real_forward(&self, input: &[f64], scratch: &mut Vec<Complex64>) -> Vec<Complex64> {
        scratch.clear();
        scratch.extend(input.iter().map(|&x| Complex64::new(x, 0.0)));
        scratch.resize(self.n, Complex64::new(0.0, 0.0));
        self.process(scratch);
        scratch[..=self.n / 2].to_vec()
    }
}

/// O(N^2) reference DFT.
pub fn dft_direct(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    let angle = -std::f64::consts::TAU * ((k * t) % n) as f64 / n as f64;
                    x * Complex64::from_polar(1.0, angle)
                })
                .sum()
        })
        .collect()
}
