//! Tape-based reverse-mode differentiation over dense row-major tensors.
//!
//! Every op is a method on [`Tape`] returning a [`Var`]; calling
//! [`Tape::backward`] on a scalar fills leaf gradients.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod init;
pub mod ops;
mod real;
mod tape;
mod tensor;

pub use adam::{Adam, Parameter};
pub use checkpoint::{Checkpoint, CheckpointRecord};
pub use gradcheck::{grad_check, GradCheckReport, GRAD_CHECK_STEP};
pub use init::{kaiming_uniform, RELU_GAIN};
pub use ops::{conv_axis, one_hot, BatchNormState, Mode, Padding};
pub use real::{gemm, Real};
pub use tape::{Backward, Profile, Tape, Var};
pub use tensor::Tensor;
