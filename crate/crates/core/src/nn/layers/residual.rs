use alloc::vec::Vec;

use super::{BatchNorm, Conv1d, Module, Relu};
use crate::nn::{shape_err, Mode, NnError, Scalar, Tensor};
use crate::rng::Rng;

/// Identity block: `relu(bn(conv(relu(bn(conv(x))))) + x)`.
#[derive(Debug, Clone)]
pub struct ResidualBlock<T: Scalar> {
    pub conv1: Conv1d<T>,
    pub bn1: BatchNorm<T>,
    relu1: Relu,
    pub conv2: Conv1d<T>,
    pub bn2: BatchNorm<T>,
    relu_out: Relu,
}

impl<T: Scalar> ResidualBlock<T> {
    pub fn new(channels: usize, kernel: usize, rng: &mut Rng) -> Self {
        ResidualBlock {
            conv1: Conv1d::new(channels, channels, kernel, 1, rng),
            bn1: BatchNorm::new(channels),
            relu1: Relu::new(),
            conv2: Conv1d::new(channels, channels, kernel, 1, rng),
            bn2: BatchNorm::new(channels),
            relu_out: Relu::new(),
        }
    }

    pub fn channels(&self) -> usize {
        self.conv1.in_channels()
    }
}

impl<T: Scalar> Module<T> for ResidualBlock<T> {
    fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let h = self.conv1.forward(input, mode)?;
        let h = self.bn1.forward(&h, mode)?;
        let h = Module::<T>::forward(&mut self.relu1, &h, mode)?;
        let h = self.conv2.forward(&h, mode)?;
        let mut h = self.bn2.forward(&h, mode)?;
        if h.shape != input.shape {
            return Err(shape_err("residual path changed the shape"));
        }
        for (a, &x) in h.data.iter_mut().zip(&input.data) {
            *a += x;
        }
        Module::<T>::forward(&mut self.relu_out, &h, mode)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let g = Module::<T>::backward(&mut self.relu_out, grad_output)?;
        let p = self.bn2.backward(&g)?;
        let p = self.conv2.backward(&p)?;
        let p = Module::<T>::backward(&mut self.relu1, &p)?;
        let p = self.bn1.backward(&p)?;
        let mut p = self.conv1.backward(&p)?;
        for (a, &s) in p.data.iter_mut().zip(&g.data) {
            *a += s;
        }
        Ok(p)
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        let mut v = self.conv1.params();
        v.extend(self.bn1.params());
        v.extend(self.conv2.params());
        v.extend(self.bn2.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.conv1.params_mut();
        v.extend(self.bn1.params_mut());
        v.extend(self.conv2.params_mut());
        v.extend(self.bn2.params_mut());
        v
    }
    fn buffers(&self) -> Vec<&Tensor<T>> {
        let mut v = self.bn1.buffers();
        v.extend(self.bn2.buffers());
        v
    }
    fn buffers_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.bn1.buffers_mut();
        v.extend(self.bn2.buffers_mut());
        v
    }
}
