//! A small CNN engine with hand-written backward passes.
//!
//! Layers are generic over [`Scalar`] so the same code runs in `f32` for
//! training and in `f64` for gradient checking.

mod kernels;
mod layers;
mod loss;
mod model;
mod optim;
mod spec;
mod tensor;
mod train;

use core::fmt::Debug;
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

pub use layers::{
    BatchNorm, Conv1d, Conv2d, Dense, Dropout, Flatten, GlobalAvgPool1d, Layer, MaxPool1d,
    MaxPool2d, Module, Relu, ResidualBlock, Softmax,
};
pub use loss::{softmax_cross_entropy, softmax_rows};
pub use model::Model;
pub use optim::Adam;
pub use spec::{build_cnn2d, build_resnet1d, build_vgg1d, LayerSpec, ModelSpec, ResNetConfig};
pub use tensor::Tensor;
pub use train::{
    evaluate_accuracy, train, EpochMetrics, FeatureSource, TrainConfig, TrainError, TrainReport,
};

/// Floating-point element type of tensors.
pub trait Scalar:
    num_traits::Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("backward called before forward")]
    MissingForwardCache,
    #[error("batch norm needs at least 2 examples in training mode, got {0}")]
    BatchTooSmall(usize),
    #[error("length {len} not divisible by pool factor {factor}")]
    IndivisibleLength { len: usize, factor: usize },
    #[error("dropout rate {0} outside [0, 1)")]
    InvalidRate(f64),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("state has {got} tensors, model expects {expected}")]
    StateMismatch { expected: usize, got: usize },
}

pub(crate) fn shape_err(msg: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(msg.into())
}

/// Product of dimensions.
pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub(crate) fn dims_to_string(shape: &[usize]) -> String {
    let parts: Vec<String> = shape.iter().map(|d| alloc::format!("{d}")).collect();
    alloc::format!("[{}]", parts.join(", "))
}
