use alloc::vec::Vec;

use super::layers::{
    BatchNorm, Conv1d, Conv2d, Dense, Dropout, Flatten, GlobalAvgPool1d, Layer, MaxPool1d,
    MaxPool2d, Module, Relu, ResidualBlock, Softmax,
};
use super::{shape_err, LayerSpec, Mode, ModelSpec, NnError, Scalar, Tensor};
use crate::rng;

/// A network instantiated from a [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct Model<T: Scalar = f32> {
    spec: ModelSpec,
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Model<T> {
    /// Builds the layers with He-uniform weights drawn from `seed`. Each
    /// dropout layer gets its own random stream of the same seed.
    pub fn new(spec: &ModelSpec, seed: u64) -> Result<Self, NnError> {
        spec.shapes()?;
        let mut init = rng::seeded(seed);
        let mut layers = Vec::new();
        let mut shape = spec.input_shape.clone();
        for (i, ls) in spec.layers.iter().enumerate() {
            match *ls {
                LayerSpec::Conv1d { out_channels, kernel, stride } => {
                    layers.push(Layer::Conv1d(Conv1d::new(shape[0], out_channels, kernel, stride, &mut init)))
                }
                LayerSpec::Conv2d { out_channels, kernel } => {
                    layers.push(Layer::Conv2d(Conv2d::new(shape[0], out_channels, kernel, &mut init)))
                }
                LayerSpec::BatchNorm => layers.push(Layer::BatchNorm(BatchNorm::new(shape[0]))),
                LayerSpec::Relu => layers.push(Layer::Relu(Relu::new())),
                LayerSpec::MaxPool1d { factor } => layers.push(Layer::MaxPool1d(MaxPool1d::new(factor))),
                LayerSpec::MaxPool2d { factor } => layers.push(Layer::MaxPool2d(MaxPool2d::new(factor))),
                LayerSpec::Dense { units } => layers.push(Layer::Dense(Dense::new(shape[0], units, &mut init))),
                LayerSpec::Dropout { rate } => layers.push(Layer::Dropout(Dropout::new(
                    rate as f64,
                    rng::stream(seed, i as u64 + 1),
                )?)),
                LayerSpec::Flatten => layers.push(Layer::Flatten(Flatten::new())),
                LayerSpec::GlobalAvgPool => layers.push(Layer::GlobalAvgPool1d(GlobalAvgPool1d::new())),
                LayerSpec::Residual { channels, kernel, repeats } => {
                    for _ in 0..repeats {
                        layers.push(Layer::Residual(ResidualBlock::new(channels, kernel, &mut init)));
                    }
                }
                LayerSpec::Softmax => layers.push(Layer::Softmax(Softmax::new())),
            }
            shape = ls.output_shape(&shape)?;
        }
        Ok(Model { spec: spec.clone(), layers })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Per-example input shape.
    pub fn input_shape(&self) -> &[usize] {
        &self.spec.input_shape
    }

    /// `input` is `[batch, ...input_shape]`; returns `[batch, 12]` logits.
    pub fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        if input.rank() != self.spec.input_shape.len() + 1 || input.shape[1..] != self.spec.input_shape[..] {
            return Err(shape_err(alloc::format!(
                "model {} expects [batch, {:?}], got {:?}",
                self.spec.name,
                self.spec.input_shape,
                input.shape
            )));
        }
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, mode)?;
        }
        Ok(x)
    }

    /// Back-propagates `grad` from the logits; parameter gradients accumulate.
    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.numel()).sum()
    }

    /// Parameters and running statistics, layer by layer (each layer's
    /// parameters first, then its buffers).
    pub fn state(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.params());
            out.extend(l.buffers());
        }
        out
    }

    /// Replaces the state with tensors in [`Model::state`] order.
    pub fn load_state(&mut self, tensors: &[Tensor<T>]) -> Result<(), NnError> {
        let expected = self.state().len();
        if tensors.len() != expected {
            return Err(NnError::StateMismatch { expected, got: tensors.len() });
        }
        let mut it = tensors.iter();
        for l in &mut self.layers {
            for slot in l.params_mut() {
                copy_into(slot, it.next().expect("count checked"))?;
            }
            for slot in l.buffers_mut() {
                copy_into(slot, it.next().expect("count checked"))?;
            }
        }
        Ok(())
    }

    /// Owned copy of [`Model::state`] without gradients.
    pub fn snapshot(&self) -> Vec<Tensor<T>> {
        self.state()
            .into_iter()
            .map(|t| Tensor { shape: t.shape.clone(), data: t.data.clone(), grad: None })
            .collect()
    }
}

fn copy_into<T: Scalar>(slot: &mut Tensor<T>, src: &Tensor<T>) -> Result<(), NnError> {
    if src.shape != slot.shape {
        return Err(shape_err(alloc::format!(
            "state tensor {:?} for slot {:?}",
            src.shape,
            slot.shape
        )));
    }
    slot.data.copy_from_slice(&src.data);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_cnn2d, build_resnet1d, build_vgg1d, softmax_cross_entropy, ResNetConfig};
    use alloc::vec;

    #[test]
    fn vgg_logit_shape() {
        let mut m = Model::<f32>::new(&build_vgg1d(1), 0).unwrap();
        let y = m.forward(&Tensor::zeros(&[2, 1, 16384]), Mode::Train).unwrap();
        assert_eq!(y.shape, vec![2, 12]);
        let y = m.forward(&Tensor::zeros(&[2, 1, 16384]), Mode::Eval).unwrap();
        assert_eq!(y.shape, vec![2, 12]);
        assert!(m.forward(&Tensor::zeros(&[2, 1, 16000]), Mode::Eval).is_err());
    }

    #[test]
    fn cnn2d_param_budget() {
        for (b, f) in [(129, 124), (241, 49)] {
            let mut m = Model::<f32>::new(&build_cnn2d(b, f), 0).unwrap();
            assert!(m.param_count() < 2_000_000, "{} params", m.param_count());
            let y = m.forward(&Tensor::zeros(&[2, 1, b, f]), Mode::Eval).unwrap();
            assert_eq!(y.shape, vec![2, 12]);
        }
    }

    #[test]
    fn resnet_gradient_reaches_stem() {
        let mut m = Model::<f32>::new(&build_resnet1d(&ResNetConfig::default()), 11).unwrap();
        let mut r = rng::seeded(4);
        let x: Vec<f32> = (0..2 * 16384).map(|_| rng::uniform(&mut r, -1.0, 1.0) as f32).collect();
        let x = Tensor::from_vec(&[2, 1, 16384], x).unwrap();
        let logits = m.forward(&x, Mode::Train).unwrap();
        assert_eq!(logits.shape, vec![2, 12]);
        let (_, g) = softmax_cross_entropy(&logits, &[3, 7]).unwrap();
        m.zero_grad();
        m.backward(&g).unwrap();
        let stem = m.params()[0].grad.as_ref().unwrap();
        assert!(stem.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn state_round_trip_and_determinism() {
        let spec = build_cnn2d(16, 16);
        let a = Model::<f32>::new(&spec, 5).unwrap();
        let mut b = Model::<f32>::new(&spec, 6).unwrap();
        assert_ne!(a.snapshot(), b.snapshot());
        b.load_state(&a.snapshot()).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
        assert!(b.load_state(&a.snapshot()[1..]).is_err());

        let x = Tensor::full(&[3, 1, 16, 16], 0.3f32);
        let mut a1 = a.clone();
        let mut a2 = a.clone();
        assert_eq!(a1.forward(&x, Mode::Train).unwrap(), a2.forward(&x, Mode::Train).unwrap());
    }
}
