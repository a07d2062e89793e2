mod conv;
mod norm;
mod residual;
mod simple;

use alloc::vec::Vec;

use super::{Mode, NnError, Scalar, Tensor};
use crate::rng::Rng;

pub use conv::{Conv1d, Conv2d};
pub use norm::BatchNorm;
pub use residual::ResidualBlock;
pub use simple::{Dense, Dropout, Flatten, GlobalAvgPool1d, MaxPool1d, MaxPool2d, Relu, Softmax};

/// A differentiable layer.
///
/// `backward` consumes the cache left by the latest `forward`, accumulates
/// parameter gradients into each parameter's `grad` buffer and returns the
/// gradient with respect to the input.
pub trait Module<T: Scalar> {
    fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError>;
    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError>;

    /// Trainable parameters, in a fixed order.
    fn params(&self) -> Vec<&Tensor<T>> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        Vec::new()
    }
    /// Non-trainable state saved with checkpoints (running statistics).
    fn buffers(&self) -> Vec<&Tensor<T>> {
        Vec::new()
    }
    fn buffers_mut(&mut self) -> Vec<&mut Tensor<T>> {
        Vec::new()
    }
}

/// He-uniform initialisation: `U(-√(6/fan_in), √(6/fan_in))`.
pub(crate) fn he_uniform<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor<T> {
    let limit = libm::sqrt(6.0 / fan_in as f64);
    let n = super::numel(shape);
    let data = (0..n)
        .map(|_| T::of(crate::rng::uniform(rng, -limit, limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape matches").into_param()
}

#[derive(Debug, Clone)]
pub enum Layer<T: Scalar> {
    Conv1d(Conv1d<T>),
    Conv2d(Conv2d<T>),
    BatchNorm(BatchNorm<T>),
    Relu(Relu),
    MaxPool1d(MaxPool1d),
    MaxPool2d(MaxPool2d),
    Dense(Dense<T>),
    Dropout(Dropout<T>),
    Flatten(Flatten),
    GlobalAvgPool1d(GlobalAvgPool1d),
    Residual(ResidualBlock<T>),
    Softmax(Softmax<T>),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $body:expr) => {
        match $self {
            Layer::Conv1d($l) => $body,
            Layer::Conv2d($l) => $body,
            Layer::BatchNorm($l) => $body,
            Layer::Relu($l) => $body,
            Layer::MaxPool1d($l) => $body,
            Layer::MaxPool2d($l) => $body,
            Layer::Dense($l) => $body,
            Layer::Dropout($l) => $body,
            Layer::Flatten($l) => $body,
            Layer::GlobalAvgPool1d($l) => $body,
            Layer::Residual($l) => $body,
            Layer::Softmax($l) => $body,
        }
    };
}

impl<T: Scalar> Module<T> for Layer<T> {
    fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        dispatch!(self, l => Module::<T>::forward(l, input, mode))
    }
    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        dispatch!(self, l => Module::<T>::backward(l, grad_output))
    }
    fn params(&self) -> Vec<&Tensor<T>> {
        dispatch!(self, l => Module::<T>::params(l))
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        dispatch!(self, l => Module::<T>::params_mut(l))
    }
    fn buffers(&self) -> Vec<&Tensor<T>> {
        dispatch!(self, l => Module::<T>::buffers(l))
    }
    fn buffers_mut(&mut self) -> Vec<&mut Tensor<T>> {
        dispatch!(self, l => Module::<T>::buffers_mut(l))
    }
}

impl<T: Scalar> Layer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "conv1d",
            Layer::Conv2d(_) => "conv2d",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Relu(_) => "relu",
            Layer::MaxPool1d(_) => "maxpool1d",
            Layer::MaxPool2d(_) => "maxpool2d",
            Layer::Dense(_) => "dense",
            Layer::Dropout(_) => "dropout",
            Layer::Flatten(_) => "flatten",
            Layer::GlobalAvgPool1d(_) => "gap1d",
            Layer::Residual(_) => "residual",
            Layer::Softmax(_) => "softmax",
        }
    }
}

pub(crate) fn expect_rank<T: Scalar>(t: &Tensor<T>, rank: usize, who: &str) -> Result<(), NnError> {
    if t.rank() != rank {
        return Err(super::shape_err(alloc::format!(
            "{who} expects rank {rank}, got {}",
            super::dims_to_string(&t.shape)
        )));
    }
    Ok(())
}

pub(crate) fn expect_shape<T: Scalar>(t: &Tensor<T>, shape: &[usize], who: &str) -> Result<(), NnError> {
    if t.shape != shape {
        return Err(super::shape_err(alloc::format!(
            "{who} expects {}, got {}",
            super::dims_to_string(shape),
            super::dims_to_string(&t.shape)
        )));
    }
    Ok(())
}
