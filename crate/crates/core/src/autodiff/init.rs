use rand::Rng;

use crate::autodiff::{Real, Tensor};

/// Uniform on `±gain·√(3/fan_in)`.
pub fn kaiming_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, shape: &[usize], fan_in: usize, gain: f64) -> Tensor<T> {
    let bound = gain * (3.0 / fan_in.max(1) as f64).sqrt();
    Tensor::from_fn(shape, |_| T::of(rng.random_range(-bound..=bound)))
}

pub const RELU_GAIN: f64 = std::f64::consts::SQRT_2;
