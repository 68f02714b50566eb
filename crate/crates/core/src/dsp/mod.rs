//! Short-time Fourier analysis: framing, windowing, radix-2 FFT and the
//! power spectrogram shared by the spectral feature extractors.

mod fft;
mod stft;
mod window;

pub use fft::{dft_direct, Fft};
pub use stft::{
    frame_count, frame_signal, power_spectrogram, stft, ComplexSpectrogram, PowerSpectrogram, SpectrumCache, StftConfig,
};
pub use window::{window, WindowKind};

pub use num_complex::Complex64;
