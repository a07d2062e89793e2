use alloc::vec;
use alloc::vec::Vec;

use super::Module;
use crate::nn::{shape_err, Mode, NnError, Scalar, Tensor};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

/// Per-channel normalisation over batch and spatial positions.
///
/// Accepts `[batch, channels, ...]`. Running statistics follow
/// `r ← 0.9·r + 0.1·batch_stat`.
#[derive(Debug, Clone)]
pub struct BatchNorm<T: Scalar> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: T,
    pub eps: T,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    shape: Vec<usize>,
    train: bool,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: Tensor::full(&[channels], T::one()).into_param(),
            beta: Tensor::zeros(&[channels]).into_param(),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::one()),
            momentum: T::of(BN_MOMENTUM),
            eps: T::of(BN_EPS),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.numel()
    }
}

impl<T: Scalar> Module<T> for BatchNorm<T> {
    fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        if input.rank() < 2 || input.shape[1] != self.channels() {
            return Err(shape_err(alloc::format!(
                "batchnorm over {} channels got {}",
                self.channels(),
                crate::nn::dims_to_string(&input.shape)
            )));
        }
        let batch = input.shape[0];
        let c = self.channels();
        let spatial: usize = input.shape[2..].iter().product();
        let count = batch * spatial;
        let train = mode == Mode::Train;
        if train && batch < 2 {
            return Err(NnError::BatchTooSmall(batch));
        }

        let mut inv_std = vec![T::zero(); c];
        let mut xhat = vec![T::zero(); input.numel()];
        let mut out = vec![T::zero(); input.numel()];
        for ch in 0..c {
            let (mean, inv) = if train {
                let mut s = T::zero();
                for b in 0..batch {
                    s += crate::nn::kernels::sum(&input.data[(b * c + ch) * spatial..][..spatial]);
                }
                let mean = s / T::of(count as f64);
                let mut v = T::zero();
                for b in 0..batch {
                    for &x in &input.data[(b * c + ch) * spatial..][..spatial] {
                        let d = x - mean;
                        v += d * d;
                    }
                }
                let var = v / T::of(count as f64);
                let m = self.momentum;
                self.running_mean.data[ch] = m * self.running_mean.data[ch] + (T::one() - m) * mean;
                self.running_var.data[ch] = m * self.running_var.data[ch] + (T::one() - m) * var;
                (mean, T::one() / (var + self.eps).sqrt())
            } else {
                (
                    self.running_mean.data[ch],
                    T::one() / (self.running_var.data[ch] + self.eps).sqrt(),
                )
            };
            inv_std[ch] = inv;
            let (g, bt) = (self.gamma.data[ch], self.beta.data[ch]);
            for b in 0..batch {
                let base = (b * c + ch) * spatial;
                for i in base..base + spatial {
                    let xh = (input.data[i] - mean) * inv;
                    xhat[i] = xh;
                    out[i] = g * xh + bt;
                }
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            shape: input.shape.clone(),
            train,
        });
        Tensor::from_vec(&input.shape, out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let cache = self.cache.as_ref().ok_or(NnError::MissingForwardCache)?;
        if grad_output.shape != cache.shape {
            return Err(shape_err("batchnorm backward shape differs from forward"));
        }
        let batch = cache.shape[0];
        let c = self.channels();
        let spatial: usize = cache.shape[2..].iter().product();
        let n = T::of((batch * spatial) as f64);
        let gg = self.gamma.grad.as_mut().expect("param grad");
        let gbeta = self.beta.grad.as_mut().expect("param grad");
        let mut gx = vec![T::zero(); grad_output.numel()];
        for ch in 0..c {
            let mut sum_dy = T::zero();
            let mut sum_dy_xhat = T::zero();
            for b in 0..batch {
                let base = (b * c + ch) * spatial;
                for i in base..base + spatial {
                    sum_dy += grad_output.data[i];
                    sum_dy_xhat += grad_output.data[i] * cache.xhat[i];
                }
            }
            gg[ch] += sum_dy_xhat;
            gbeta[ch] += sum_dy;
            let g = self.gamma.data[ch];
            let inv = cache.inv_std[ch];
            for b in 0..batch {
                let base = (b * c + ch) * spatial;
                for i in base..base + spatial {
                    gx[i] = if cache.train {
                        g * inv / n * (n * grad_output.data[i] - sum_dy - cache.xhat[i] * sum_dy_xhat)
                    } else {
                        g * inv * grad_output.data[i]
                    };
                }
            }
        }
        Tensor::from_vec(&cache.shape, gx)
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.gamma, &self.beta]
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.gamma, &mut self.beta]
    }
    fn buffers(&self) -> Vec<&Tensor<T>> {
        vec![&self.running_mean, &self.running_var]
    }
    fn buffers_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.running_mean, &mut self.running_var]
    }
}
