use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{expect_rank, expect_shape, he_uniform, Module};
use crate::nn::kernels::{axpy, dot};
use crate::nn::{shape_err, Mode, NnError, Scalar, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<(Vec<usize>, Vec<bool>)>,
}

impl Relu {
    pub fn new() -> Self {
        Relu::default()
    }
}

impl<T: Scalar> Module<T> for Relu {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        let mask: Vec<bool> = input.data.iter().map(|&v| v > T::zero()).collect();
        let out = input
            .data
            .iter()
            .zip(&mask)
            .map(|(&v, &keep)| if keep { v } else { T::zero() })
            .collect();
        self.mask = Some((input.shape.clone(), mask));
        Tensor::from_vec(&input.shape, out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (shape, mask) = self.mask.as_ref().ok_or(NnError::MissingForwardCache)?;
        expect_shape(grad_output, shape, "relu backward")?;
        let g = grad_output
            .data
            .iter()
            .zip(mask)
            .map(|(&g, &keep)| if keep { g } else { T::zero() })
            .collect();
        Tensor::from_vec(shape, g)
    }
}

/// Non-overlapping max over windows of `factor`. The length must divide.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pub factor: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool1d {
    pub fn new(factor: usize) -> Self {
        MaxPool1d { factor, cache: None }
    }
}

impl<T: Scalar> Module<T> for MaxPool1d {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        expect_rank(input, 3, "maxpool1d")?;
        let len = input.shape[2];
        let f = self.factor;
        if f == 0 || len % f != 0 {
            return Err(NnError::IndivisibleLength { len, factor: f });
        }
        let rows = input.shape[0] * input.shape[1];
        let out_len = len / f;
        let mut out = Vec::with_capacity(rows * out_len);
        let mut arg = Vec::with_capacity(rows * out_len);
        for r in 0..rows {
            for o in 0..out_len {
                let start = r * len + o * f;
                let mut best = start;
                for i in start + 1..start + f {
                    if input.data[i] > input.data[best] {
                        best = i;
                    }
                }
                out.push(input.data[best]);
                arg.push(best);
            }
        }
        self.cache = Some((input.shape.clone(), arg));
        Tensor::from_vec(&[input.shape[0], input.shape[1], out_len], out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (shape, arg) = self.cache.as_ref().ok_or(NnError::MissingForwardCache)?;
        if grad_output.numel() != arg.len() {
            return Err(shape_err("maxpool1d backward size differs from forward"));
        }
        let mut g = vec![T::zero(); crate::nn::numel(shape)];
        for (&i, &go) in arg.iter().zip(&grad_output.data) {
            g[i] += go;
        }
        Tensor::from_vec(shape, g)
    }
}

/// Non-overlapping `factor × factor` max; odd trailing rows/columns dropped.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub factor: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(factor: usize) -> Self {
        MaxPool2d { factor, cache: None }
    }
}

impl<T: Scalar> Module<T> for MaxPool2d {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        expect_rank(input, 4, "maxpool2d")?;
        let (h, w) = (input.shape[2], input.shape[3]);
        let f = self.factor;
        if f == 0 || h < f || w < f {
            return Err(shape_err(alloc::format!("maxpool2d factor {f} on {h}x{w}")));
        }
        let (oh, ow) = (h / f, w / f);
        let planes = input.shape[0] * input.shape[1];
        let mut out = Vec::with_capacity(planes * oh * ow);
        let mut arg = Vec::with_capacity(planes * oh * ow);
        for p in 0..planes {
            let base = p * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * f * w + ox * f;
                    for dy in 0..f {
                        for dx in 0..f {
                            let i = base + (oy * f + dy) * w + ox * f + dx;
                            if input.data[i] > input.data[best] {
                                best = i;
                            }
                        }
                    }
                    out.push(input.data[best]);
                    arg.push(best);
                }
            }
        }
        self.cache = Some((input.shape.clone(), arg));
        Tensor::from_vec(&[input.shape[0], input.shape[1], oh, ow], out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (shape, arg) = self.cache.as_ref().ok_or(NnError::MissingForwardCache)?;
        if grad_output.numel() != arg.len() {
            return Err(shape_err("maxpool2d backward size differs from forward"));
        }
        let mut g = vec![T::zero(); crate::nn::numel(shape)];
        for (&i, &go) in arg.iter().zip(&grad_output.data) {
            g[i] += go;
        }
        Tensor::from_vec(shape, g)
    }
}

/// Fully connected layer on `[batch, in]`.
#[derive(Debug, Clone)]
pub struct Dense<T: Scalar> {
    /// `[out, in]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Dense {
            weight: he_uniform(&[outputs, inputs], inputs, rng),
            bias: Tensor::zeros(&[outputs]).into_param(),
            input: None,
        }
    }

    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self, NnError> {
        expect_rank(&weight, 2, "dense weight")?;
        expect_shape(&bias, &weight.shape[..1], "dense bias")?;
        Ok(Dense {
            weight: weight.into_param(),
            bias: bias.into_param(),
            input: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }
    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }
}

impl<T: Scalar> Module<T> for Dense<T> {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        expect_rank(input, 2, "dense")?;
        let (batch, nin) = (input.shape[0], input.shape[1]);
        if nin != self.inputs() {
            return Err(shape_err(alloc::format!("dense expects {} inputs, got {nin}", self.inputs())));
        }
        let nout = self.outputs();
        let mut out = Vec::with_capacity(batch * nout);
        for b in 0..batch {
            let x = &input.data[b * nin..][..nin];
            for o in 0..nout {
                out.push(self.bias.data[o] + dot(&self.weight.data[o * nin..][..nin], x));
            }
        }
        self.input = Some(input.clone());
        Tensor::from_vec(&[batch, nout], out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let input = self.input.as_ref().ok_or(NnError::MissingForwardCache)?;
        let (batch, nin, nout) = (input.shape[0], self.inputs(), self.outputs());
        expect_shape(grad_output, &[batch, nout], "dense backward")?;
        let gw = self.weight.grad.as_mut().expect("param grad");
        let gb = self.bias.grad.as_mut().expect("param grad");
        let mut gx = vec![T::zero(); batch * nin];
        for b in 0..batch {
            let x = &input.data[b * nin..][..nin];
            let gxr = &mut gx[b * nin..][..nin];
            for o in 0..nout {
                let g = grad_output.data[b * nout + o];
                gb[o] += g;
                axpy(g, x, &mut gw[o * nin..][..nin]);
                axpy(g, &self.weight.data[o * nin..][..nin], gxr);
            }
        }
        Tensor::from_vec(&[batch, nin], gx)
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Inverted dropout: survivors are scaled by `1/(1 − rate)` during training.
#[derive(Debug, Clone)]
pub struct Dropout<T: Scalar> {
    pub rate: f64,
    rng: Rng,
    /// `None` after an eval-mode forward (identity).
    mask: Option<Option<Vec<T>>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64, rng: Rng) -> Result<Self, NnError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NnError::InvalidRate(rate));
        }
        Ok(Dropout { rate, rng, mask: None })
    }
}

impl<T: Scalar> Module<T> for Dropout<T> {
    fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        if mode == Mode::Eval || self.rate == 0.0 {
            self.mask = Some(None);
            return Ok(input.clone());
        }
        let scale = T::of(1.0 / (1.0 - self.rate));
        let mask: Vec<T> = (0..input.numel())
            .map(|_| {
                if self.rng.random::<f64>() < self.rate {
                    T::zero()
                } else {
                    scale
                }
            })
            .collect();
        let out = input.data.iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        self.mask = Some(Some(mask));
        Tensor::from_vec(&input.shape, out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        match self.mask.as_ref().ok_or(NnError::MissingForwardCache)? {
            None => Ok(grad_output.clone()),
            Some(mask) => {
                if mask.len() != grad_output.numel() {
                    return Err(shape_err("dropout backward size differs from forward"));
                }
                let g = grad_output.data.iter().zip(mask).map(|(&g, &m)| g * m).collect();
                Tensor::from_vec(&grad_output.shape, g)
            }
        }
    }
}

/// `[batch, ...] → [batch, rest]`
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Flatten::default()
    }
}

impl<T: Scalar> Module<T> for Flatten {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        if input.rank() < 2 {
            return Err(shape_err("flatten needs a batch dimension"));
        }
        self.shape = Some(input.shape.clone());
        let rest = input.shape[1..].iter().product();
        input.reshaped(&[input.shape[0], rest])
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let shape = self.shape.as_ref().ok_or(NnError::MissingForwardCache)?;
        grad_output.reshaped(shape)
    }
}

/// Mean over the length axis: `[batch, channels, len] → [batch, channels]`.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool1d {
    shape: Option<Vec<usize>>,
}

impl GlobalAvgPool1d {
    pub fn new() -> Self {
        GlobalAvgPool1d::default()
    }
}

impl<T: Scalar> Module<T> for GlobalAvgPool1d {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        expect_rank(input, 3, "global average pool")?;
        let len = input.shape[2];
        let inv = T::of(1.0 / len as f64);
        let out = input.data.chunks_exact(len).map(|row| crate::nn::kernels::sum(row) * inv).collect();
        self.shape = Some(input.shape.clone());
        Tensor::from_vec(&input.shape[..2], out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let shape = self.shape.as_ref().ok_or(NnError::MissingForwardCache)?;
        expect_shape(grad_output, &shape[..2], "global average pool backward")?;
        let len = shape[2];
        let inv = T::of(1.0 / len as f64);
        let mut g = Vec::with_capacity(crate::nn::numel(shape));
        for &go in &grad_output.data {
            g.extend(core::iter::repeat_n(go * inv, len));
        }
        Tensor::from_vec(shape, g)
    }
}

/// Softmax over the last axis.
#[derive(Debug, Clone, Default)]
pub struct Softmax<T: Scalar> {
    output: Option<Tensor<T>>,
}

impl<T: Scalar> Softmax<T> {
    pub fn new() -> Self {
        Softmax { output: None }
    }
}

impl<T: Scalar> Module<T> for Softmax<T> {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        let out = crate::nn::softmax_rows(input)?;
        self.output = Some(out.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let y = self.output.as_ref().ok_or(NnError::MissingForwardCache)?;
        expect_shape(grad_output, &y.shape, "softmax backward")?;
        let k = *y.shape.last().expect("rank checked in forward");
        let mut g = Vec::with_capacity(y.numel());
        for (yr, gr) in y.data.chunks_exact(k).zip(grad_output.data.chunks_exact(k)) {
            let s = dot(yr, gr);
            g.extend(yr.iter().zip(gr).map(|(&yi, &gi)| yi * (gi - s)));
        }
        Tensor::from_vec(&y.shape, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn relu_masks_negatives() {
        let mut r = Relu::new();
        let x = Tensor::from_vec(&[1, 4], vec![-1.0f32, 2.0, 0.0, 3.0]).unwrap();
        assert_eq!(r.forward(&x, Mode::Train).unwrap().data, vec![0.0, 2.0, 0.0, 3.0]);
        let g = r.backward(&Tensor::full(&[1, 4], 1.0f32)).unwrap();
        assert_eq!(g.data, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn maxpool1d_examples() {
        let mut p = MaxPool1d::new(4);
        let x = Tensor::from_vec(&[1, 1, 8], vec![1.0f32, 3.0, 2.0, 4.0, 5.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.forward(&x, Mode::Eval).unwrap().data, vec![4.0, 5.0]);
        let c = Tensor::full(&[2, 3, 16], 0.25f32);
        assert!(p.forward(&c, Mode::Eval).unwrap().data.iter().all(|&v| v == 0.25));
        assert_eq!(
            p.forward(&Tensor::<f32>::zeros(&[1, 1, 10]), Mode::Eval),
            Err(NnError::IndivisibleLength { len: 10, factor: 4 })
        );
        let mut len = 16384;
        for _ in 0..5 {
            let y = p.forward(&Tensor::<f32>::zeros(&[1, 1, len]), Mode::Eval).unwrap();
            len = y.shape[2];
        }
        assert_eq!(len, 16);
    }

    #[test]
    fn maxpool2d_floors() {
        let mut p = MaxPool2d::new(2);
        let x = Tensor::from_vec(&[1, 1, 3, 3], (0..9).map(|v| v as f32).collect()).unwrap();
        let y = p.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.shape, vec![1, 1, 1, 1]);
        assert_eq!(y.data, vec![4.0]);
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::full(&[1, 100], 1.0f32);
        let mut d = Dropout::<f32>::new(0.0, seeded(1)).unwrap();
        assert_eq!(d.forward(&x, Mode::Train).unwrap(), x);
        let mut d = Dropout::<f32>::new(0.5, seeded(1)).unwrap();
        assert_eq!(d.forward(&x, Mode::Eval).unwrap(), x);
        assert!(Dropout::<f32>::new(1.0, seeded(1)).is_err());
        assert!(Dropout::<f32>::new(-0.1, seeded(1)).is_err());
    }

    #[test]
    fn dropout_statistics() {
        let n = 100_000;
        let x = Tensor::full(&[1, n], 1.0f64);
        let mut d = Dropout::<f64>::new(0.5, seeded(2024)).unwrap();
        let y = d.forward(&x, Mode::Train).unwrap();
        let kept = y.data.iter().filter(|&&v| v != 0.0).count() as f64 / n as f64;
        assert!((kept - 0.5).abs() < 0.01, "kept {kept}");
        let mean = y.data.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn backward_without_forward() {
        let g = Tensor::<f32>::zeros(&[1, 2]);
        assert_eq!(Module::<f32>::backward(&mut Relu::new(), &g), Err(NnError::MissingForwardCache));
        assert_eq!(Module::<f32>::backward(&mut MaxPool1d::new(2), &g), Err(NnError::MissingForwardCache));
        assert_eq!(Module::<f32>::backward(&mut Flatten::new(), &g), Err(NnError::MissingForwardCache));
        let mut dense = Dense::<f32>::new(2, 2, &mut seeded(0));
        assert_eq!(dense.backward(&g), Err(NnError::MissingForwardCache));
        let mut drop = Dropout::<f32>::new(0.5, seeded(0)).unwrap();
        assert_eq!(drop.backward(&g), Err(NnError::MissingForwardCache));
    }
}
