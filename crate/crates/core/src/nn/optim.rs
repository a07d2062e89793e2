use alloc::vec;
use alloc::vec::Vec;

use super::{Scalar, Tensor};

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// lr 1e−3, β = (0.9, 0.999), ε = 1e−8.
    pub fn default_params() -> Self {
        Adam::new(1e-3, 0.9, 0.999, 1e-8)
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// Updates every parameter from its `grad` buffer. The parameter list must
    /// have the same order and sizes on every call.
    pub fn step(&mut self, params: Vec<&mut Tensor<T>>) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.numel()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        let step_size = T::of(self.lr / c1);
        let inv_c2 = T::of(1.0 / c2);
        let eps = T::of(self.eps);
        for ((p, m), v) in params.into_iter().zip(&mut self.m).zip(&mut self.v) {
            let Some(grad) = p.grad.as_ref() else { continue };
            for (((w, &g), mi), vi) in p.data.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + (T::one() - b1) * g;
                *vi = b2 * *vi + (T::one() - b2) * g * g;
                *w -= step_size * *mi / ((*vi * inv_c2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_descends_on_quadratic() {
        // loss = (w - 3)^2
        let mut w = Tensor::from_vec(&[1], vec![0.0f64]).unwrap().into_param();
        let loss = |x: f64| (x - 3.0) * (x - 3.0);
        let before = loss(w.data[0]);
        w.grad.as_mut().unwrap()[0] = 2.0 * (w.data[0] - 3.0);
        let mut opt = Adam::default_params();
        opt.step(vec![&mut w]);
        assert!(loss(w.data[0]) < before);
        assert!((w.data[0] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn zero_lr_is_a_no_op() {
        let mut w = Tensor::from_vec(&[3], vec![0.1f32, -2.0, 7.5]).unwrap().into_param();
        w.grad = Some(vec![1.0, -3.0, 0.25]);
        let before = w.data.clone();
        let mut opt = Adam::new(0.0, 0.9, 0.999, 1e-8);
        for _ in 0..10 {
            opt.step(vec![&mut w]);
        }
        assert_eq!(w.data, before);
    }
}
