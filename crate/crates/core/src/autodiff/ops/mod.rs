//! Differentiable layer primitives, exposed as methods on [`Tape`](super::Tape).

mod activation;
mod conv;
mod dense;
mod loss;
mod norm;
mod pool;
mod shape;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conv::{conv2d_naive, depthwise_separable_params};
pub use loss::one_hot;
pub use norm::{BatchNormState, BN_EPSILON, BN_MOMENTUM};

/// Spatial padding rule shared by convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Output extent `ceil(in / stride)`; the extra row or column goes to the bottom/right.
    Same,
    /// No padding; the kernel must fit inside the input.
    Valid,
}

/// Train mode uses batch statistics and active dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Output extent and leading pad along one axis.
pub fn conv_axis(input: usize, kernel: usize, stride: usize, padding: Padding) -> Result<(usize, usize)> {
    if kernel == 0 || stride == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    match padding {
        Padding::Valid => {
            if kernel > input {
                return Err(Error::Shape(format!("kernel {kernel} exceeds input extent {input}")));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            Ok((out, total / 2))
        }
    }
}

#[cfg(test)]
mod tests;
