use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::NnError;
use crate::dataset::NUM_CLASSES;

/// Length of the raw-waveform network input (4 × 4096).
pub const WAVE_INPUT_LEN: usize = 16384;
/// Kernel size of every VGG-like convolution and every ResNet-like
/// convolution after the stem.
pub const KERNEL: usize = 9;
/// Kernel size of the ResNet-like stem.
pub const STEM_KERNEL: usize = 80;
pub const POOL: usize = 4;
pub const DROPOUT: f32 = 0.5;

/// One layer descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv1d { out_channels: usize, kernel: usize, stride: usize },
    Conv2d { out_channels: usize, kernel: usize },
    BatchNorm,
    Relu,
    MaxPool1d { factor: usize },
    MaxPool2d { factor: usize },
    Dense { units: usize },
    Dropout { rate: f32 },
    Flatten,
    GlobalAvgPool,
    /// `repeats` identity blocks of two `kernel`-wide convolutions each.
    Residual { channels: usize, kernel: usize, repeats: usize },
    Softmax,
}

/// Ordered layer list plus the per-example input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

fn invalid(msg: impl Into<String>) -> NnError {
    NnError::InvalidSpec(msg.into())
}

impl LayerSpec {
    /// Per-example output shape for a per-example input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let need_rank = |r: usize| {
            if input.len() == r {
                Ok(())
            } else {
                Err(invalid(format!("{self} needs rank-{r} input, got {input:?}")))
            }
        };
        Ok(match *self {
            LayerSpec::Conv1d { out_channels, kernel, stride } => {
                need_rank(2)?;
                if kernel == 0 || stride == 0 || out_channels == 0 {
                    return Err(invalid(format!("{self}: zero-sized parameter")));
                }
                vec![out_channels, input[1].div_ceil(stride)]
            }
            LayerSpec::Conv2d { out_channels, kernel } => {
                need_rank(3)?;
                if kernel % 2 == 0 || out_channels == 0 {
                    return Err(invalid(format!("{self}: kernel must be odd")));
                }
                vec![out_channels, input[1], input[2]]
            }
            LayerSpec::BatchNorm | LayerSpec::Relu | LayerSpec::Dropout { .. } | LayerSpec::Softmax => {
                if let LayerSpec::Dropout { rate } = *self {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(NnError::InvalidRate(rate as f64));
                    }
                }
                input.to_vec()
            }
            LayerSpec::MaxPool1d { factor } => {
                need_rank(2)?;
                if factor == 0 || input[1] % factor != 0 {
                    return Err(NnError::IndivisibleLength { len: input[1], factor });
                }
                vec![input[0], input[1] / factor]
            }
            LayerSpec::MaxPool2d { factor } => {
                need_rank(3)?;
                if factor == 0 || input[1] < factor || input[2] < factor {
                    return Err(invalid(format!("{self} on {input:?}")));
                }
                vec![input[0], input[1] / factor, input[2] / factor]
            }
            LayerSpec::Dense { units } => {
                need_rank(1)?;
                vec![units]
            }
            LayerSpec::Flatten => vec![input.iter().product()],
            LayerSpec::GlobalAvgPool => {
                need_rank(2)?;
                vec![input[0]]
            }
            LayerSpec::Residual { channels, kernel, .. } => {
                need_rank(2)?;
                if input[0] != channels {
                    return Err(invalid(format!(
                        "{self} on {} channels; identity blocks cannot change width",
                        input[0]
                    )));
                }
                if kernel == 0 {
                    return Err(invalid("residual kernel must be positive"));
                }
                input.to_vec()
            }
        })
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv1d { out_channels, kernel, stride } => write!(f, "conv1d {out_channels} {kernel} {stride}"),
            LayerSpec::Conv2d { out_channels, kernel } => write!(f, "conv2d {out_channels} {kernel}"),
            LayerSpec::BatchNorm => f.write_str("batchnorm"),
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::MaxPool1d { factor } => write!(f, "maxpool1d {factor}"),
            LayerSpec::MaxPool2d { factor } => write!(f, "maxpool2d {factor}"),
            LayerSpec::Dense { units } => write!(f, "dense {units}"),
            LayerSpec::Dropout { rate } => write!(f, "dropout {rate}"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::GlobalAvgPool => f.write_str("gap1d"),
            LayerSpec::Residual { channels, kernel, repeats } => write!(f, "residual {channels} {kernel} {repeats}"),
            LayerSpec::Softmax => f.write_str("softmax"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = NnError;

    fn from_str(line: &str) -> Result<Self, NnError> {
        let mut parts = line.split_whitespace();
        let op = parts.next().ok_or_else(|| invalid("empty layer line"))?;
        let args: Vec<&str> = parts.collect();
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("{op} takes {n} arguments: {line:?}")))
            }
        };
        let num = |i: usize| -> Result<usize, NnError> {
            args[i].parse().map_err(|_| invalid(format!("bad number {:?} in {line:?}", args[i])))
        };
        Ok(match op {
            "conv1d" => {
                want(3)?;
                LayerSpec::Conv1d { out_channels: num(0)?, kernel: num(1)?, stride: num(2)? }
            }
            "conv2d" => {
                want(2)?;
                LayerSpec::Conv2d { out_channels: num(0)?, kernel: num(1)? }
            }
            "batchnorm" => LayerSpec::BatchNorm,
            "relu" => LayerSpec::Relu,
            "maxpool1d" => {
                want(1)?;
                LayerSpec::MaxPool1d { factor: num(0)? }
            }
            "maxpool2d" => {
                want(1)?;
                LayerSpec::MaxPool2d { factor: num(0)? }
            }
            "dense" => {
                want(1)?;
                LayerSpec::Dense { units: num(0)? }
            }
            "dropout" => {
                want(1)?;
                let rate = args[0].parse().map_err(|_| invalid(format!("bad rate in {line:?}")))?;
                LayerSpec::Dropout { rate }
            }
            "flatten" => LayerSpec::Flatten,
            "gap1d" => LayerSpec::GlobalAvgPool,
            "residual" => {
                want(3)?;
                LayerSpec::Residual { channels: num(0)?, kernel: num(1)?, repeats: num(2)? }
            }
            "softmax" => LayerSpec::Softmax,
            _ => return Err(invalid(format!("unknown layer {op:?}"))),
        })
    }
}

impl ModelSpec {
    /// Per-example shape after each layer; the last one must be `[12]`.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(invalid("input shape must be non-empty and positive"));
        }
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input_shape.clone();
        for layer in &self.layers {
            cur = layer.output_shape(&cur)?;
            shapes.push(cur.clone());
        }
        if cur != [NUM_CLASSES] {
            return Err(invalid(format!("model must emit {NUM_CLASSES} logits, emits {cur:?}")));
        }
        Ok(shapes)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}", self.name)?;
        let dims: Vec<String> = self.input_shape.iter().map(|d| d.to_string()).collect();
        writeln!(f, "input {}", dims.join(" "))?;
        for l in &self.layers {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for ModelSpec {
    type Err = NnError;

    /// Parses the text block written by `Display`; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, NnError> {
        let mut name = String::from("model");
        let mut input_shape = None;
        let mut layers = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("model ") {
                name = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("input ") {
                let dims: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
                input_shape = Some(dims.map_err(|_| invalid(format!("bad input line {line:?}")))?);
            } else {
                layers.push(line.parse()?);
            }
        }
        let input_shape = input_shape.ok_or_else(|| invalid("missing input line"))?;
        Ok(ModelSpec { name, input_shape, layers })
    }
}

/// VGG-like 1D network over a `[1, 16384]` waveform.
///
/// Five stages each ending in a 4× max-pool (16384 → 16); stages one and two
/// hold one conv+BN+ReLU, stages three to five hold two. Channels are
/// `width × (8, 16, 32, 64, 128)`; the head is two dense+BN+ReLU+dropout(0.5)
/// blocks of `128 × width` units and a 12-way output.
pub fn build_vgg1d(width_multiplier: usize) -> ModelSpec {
    let m = width_multiplier.max(1);
    let mut layers = Vec::new();
    for (stage, &base) in [8usize, 16, 32, 64, 128].iter().enumerate() {
        let convs = if stage < 2 { 1 } else { 2 };
        for _ in 0..convs {
            layers.push(LayerSpec::Conv1d { out_channels: base * m, kernel: KERNEL, stride: 1 });
            layers.push(LayerSpec::BatchNorm);
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::MaxPool1d { factor: POOL });
    }
    layers.push(LayerSpec::Flatten);
    for _ in 0..2 {
        layers.push(LayerSpec::Dense { units: 128 * m });
        layers.push(LayerSpec::BatchNorm);
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dropout { rate: DROPOUT });
    }
    layers.push(LayerSpec::Dense { units: NUM_CLASSES });
    ModelSpec {
        name: format!("vgg1d-x{m}"),
        input_shape: vec![1, WAVE_INPUT_LEN],
        layers,
    }
}

/// Widths and identity-block repeats of the ResNet-like 1D network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResNetConfig {
    pub stem_channels: usize,
    pub stage_channels: Vec<usize>,
    pub repeats: Vec<usize>,
}

impl ResNetConfig {
    /// ResNet34 repeat pattern (3, 4, 6, 3).
    pub fn resnet34() -> Self {
        ResNetConfig {
            stem_channels: 16,
            stage_channels: vec![16, 32, 64, 128],
            repeats: vec![3, 4, 6, 3],
        }
    }
}

impl Default for ResNetConfig {
    /// One identity block per stage.
    fn default() -> Self {
        ResNetConfig {
            stem_channels: 16,
            stage_channels: vec![16, 32, 64, 128],
            repeats: vec![1, 1, 1, 1],
        }
    }
}

/// ResNet-like 1D network over a `[1, 16384]` waveform.
///
/// Stem: conv(kernel 80, stride 4) + BN + ReLU + 4× max-pool. Each stage
/// widens with one conv(9)+BN+ReLU when its width differs from the previous
/// one, then stacks identity blocks; stages are separated by 4× max-pools.
/// Global average pooling feeds the 12-way dense output.
pub fn build_resnet1d(config: &ResNetConfig) -> ModelSpec {
    let mut layers = vec![
        LayerSpec::Conv1d { out_channels: config.stem_channels, kernel: STEM_KERNEL, stride: 4 },
        LayerSpec::BatchNorm,
        LayerSpec::Relu,
        LayerSpec::MaxPool1d { factor: POOL },
    ];
    let mut width = config.stem_channels;
    let stages = config.stage_channels.len().min(config.repeats.len());
    for s in 0..stages {
        let c = config.stage_channels[s];
        if s > 0 {
            layers.push(LayerSpec::MaxPool1d { factor: POOL });
        }
        if c != width {
            layers.push(LayerSpec::Conv1d { out_channels: c, kernel: KERNEL, stride: 1 });
            layers.push(LayerSpec::BatchNorm);
            layers.push(LayerSpec::Relu);
            width = c;
        }
        if config.repeats[s] > 0 {
            layers.push(LayerSpec::Residual { channels: c, kernel: KERNEL, repeats: config.repeats[s] });
        }
    }
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Dense { units: NUM_CLASSES });
    let reps: Vec<String> = config.repeats.iter().map(|r| r.to_string()).collect();
    ModelSpec {
        name: format!("resnet1d-{}", reps.join("-")),
        input_shape: vec![1, WAVE_INPUT_LEN],
        layers,
    }
}

/// Mini 2D CNN over a `bins × frames` feature map: three
/// conv3×3+BN+ReLU+pool2 stages (16, 32, 64 channels), a 128-unit
/// dense+ReLU+dropout(0.5) head and a 12-way output.
pub fn build_cnn2d(bins: usize, frames: usize) -> ModelSpec {
    let mut layers = Vec::new();
    for c in [16usize, 32, 64] {
        layers.push(LayerSpec::Conv2d { out_channels: c, kernel: 3 });
        layers.push(LayerSpec::BatchNorm);
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::MaxPool2d { factor: 2 });
    }
    layers.push(LayerSpec::Flatten);
    layers.push(LayerSpec::Dense { units: 128 });
    layers.push(LayerSpec::Relu);
    layers.push(LayerSpec::Dropout { rate: DROPOUT });
    layers.push(LayerSpec::Dense { units: NUM_CLASSES });
    ModelSpec {
        name: format!("cnn2d-{bins}x{frames}"),
        input_shape: vec![1, bins, frames],
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vgg_shape_chain() {
        let spec = build_vgg1d(1);
        let shapes = spec.shapes().unwrap();
        let pooled: Vec<usize> = spec
            .layers
            .iter()
            .zip(&shapes)
            .filter(|(l, _)| matches!(l, LayerSpec::MaxPool1d { .. }))
            .map(|(_, s)| s[1])
            .collect();
        assert_eq!(pooled, vec![4096, 1024, 256, 64, 16]);
        let flat = spec.layers.iter().position(|l| *l == LayerSpec::Flatten).unwrap();
        assert_eq!(shapes[flat - 1], vec![128, 16]);
        assert_eq!(shapes.last().unwrap(), &vec![12]);
    }

    #[test]
    fn resnet_shapes() {
        for cfg in [ResNetConfig::default(), ResNetConfig::resnet34()] {
            let spec = build_resnet1d(&cfg);
            assert_eq!(spec.shapes().unwrap().last().unwrap(), &vec![12]);
            assert!(matches!(spec.layers[0], LayerSpec::Conv1d { kernel: 80, stride: 4, .. }));
        }
    }

    #[test]
    fn cnn2d_shapes() {
        for (b, f) in [(129, 124), (241, 49), (40, 98)] {
            assert_eq!(build_cnn2d(b, f).shapes().unwrap().last().unwrap(), &vec![12]);
        }
    }

    #[test]
    fn text_round_trip() {
        for spec in [build_vgg1d(2), build_resnet1d(&ResNetConfig::resnet34()), build_cnn2d(241, 49)] {
            let text = spec.to_string();
            assert_eq!(text.parse::<ModelSpec>().unwrap(), spec);
        }
        assert!("input 1 4\nbogus 3".parse::<ModelSpec>().is_err());
        assert!("conv1d 4 9".parse::<LayerSpec>().is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = build_vgg1d(1);
        spec.layers.pop();
        assert!(spec.shapes().is_err());
        let odd = ModelSpec {
            name: "odd".into(),
            input_shape: vec![1, 10],
            layers: vec![LayerSpec::MaxPool1d { factor: 4 }],
        };
        assert!(matches!(odd.shapes(), Err(NnError::IndivisibleLength { .. })));
    }
}
