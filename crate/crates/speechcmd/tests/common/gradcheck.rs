//! Central finite-difference checks for layers in 64-bit mode.
//!
//! The scalar probed is `L = Σ y ⊙ g` for a fixed random upstream gradient
//! `g`, so `∂L/∂θ` is exactly what `backward(g)` accumulates. Every loss
//! evaluation runs on a fresh clone of the layer, which keeps dropout masks
//! and batch-norm state identical across evaluations.

use speechcmd_core::nn::{softmax_cross_entropy, Layer, Mode, Module, Tensor};
use speechcmd_core::rng;

pub const H: f64 = 1e-3;
pub const TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Default)]
pub struct GradReport {
    pub checked: usize,
    /// Points where the one-sided slopes disagree: `L` has a kink within `h`.
    pub kinks: usize,
    pub worst: f64,
    pub worst_at: String,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.worst < TOLERANCE
    }

    fn merge(&mut self, other: GradReport) {
        self.checked += other.checked;
        self.kinks += other.kinks;
        if other.worst > self.worst {
            self.worst = other.worst;
            self.worst_at = other.worst_at;
        }
    }
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + 1e-8)
}

pub fn uniform(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| rand::Rng::random_range(&mut r, lo..hi)).collect()
}

fn loss(layer: &Layer<f64>, x: &Tensor<f64>, g: &[f64], mode: Mode) -> f64 {
    let mut l = layer.clone();
    let y = l.forward(x, mode).expect("forward");
    y.data.iter().zip(g).map(|(a, b)| a * b).sum()
}

/// Compares one analytic derivative with a central difference of `f`.
///
/// With `skip_kinks`, a point whose one-sided slopes disagree is re-probed
/// at h/10 and h/100; it counts as a kink only if they still disagree at the
/// finest step, i.e. a ReLU boundary sits right at the point.
fn compare(report: &mut GradReport, analytic: f64, f: impl Fn(f64) -> f64, skip_kinks: bool, at: impl FnOnce() -> String) {
    let f0 = f(0.0);
    let mut numeric = (f(H) - f(-H)) / (2.0 * H);
    if skip_kinks {
        let mut smooth = false;
        for h in [H, H / 10.0, H / 100.0] {
            let (fp, fm) = (f(h), f(-h));
            let (up, down) = ((fp - f0) / h, (f0 - fm) / h);
            numeric = (fp - fm) / (2.0 * h);
            if (up - down).abs() <= 1e-3 * (1.0 + up.abs().max(down.abs())) {
                smooth = true;
                break;
            }
        }
        if !smooth {
            report.kinks += 1;
            return;
        }
    }
    let e = rel_error(analytic, numeric);
    report.checked += 1;
    if e > report.worst {
        report.worst = e;
        report.worst_at = at();
    }
}

/// Checks input and parameter gradients of `layer` at input `x`.
///
/// `skip_kinks` excludes points whose ±h probe straddles a kink (internal
/// ReLUs); callers report how many were excluded.
pub fn check_layer(layer: &Layer<f64>, x: &Tensor<f64>, mode: Mode, seed: u64, skip_kinks: bool) -> GradReport {
    let mut l = layer.clone();
    let y = l.forward(x, mode).expect("forward");
    let g = uniform(seed ^ 0x5eed, y.numel(), -1.0, 1.0);
    let upstream = Tensor::from_vec(&y.shape, g.clone()).unwrap();
    for p in l.params_mut() {
        p.zero_grad();
    }
    let dx = l.backward(&upstream).expect("backward");

    let mut report = GradReport::default();
    for i in 0..x.numel() {
        let f = |h: f64| {
            let mut xp = x.clone();
            xp.data[i] += h;
            loss(layer, &xp, &g, mode)
        };
        compare(&mut report, dx.data[i], f, skip_kinks, || format!("{} input[{i}]", layer.name()));
    }
    let grads: Vec<Vec<f64>> = l.params().iter().map(|p| p.grad.clone().expect("grad buffer")).collect();
    for (pi, pg) in grads.iter().enumerate() {
        for j in 0..pg.len() {
            let f = |h: f64| {
                let mut lp = layer.clone();
                lp.params_mut()[pi].data[j] += h;
                loss(&lp, x, &g, mode)
            };
            compare(&mut report, pg[j], f, skip_kinks, || format!("{} param{pi}[{j}]", layer.name()));
        }
    }
    report
}

/// Replaces every parameter with uniform values in `[-1, 1)` so that
/// scale and shift parameters are exercised away from their defaults.
pub fn randomize_params(layer: &mut Layer<f64>, seed: u64) {
    for (i, p) in layer.params_mut().into_iter().enumerate() {
        let n = p.data.len();
        p.data = uniform(seed.wrapping_add(i as u64 * 7919), n, -1.0, 1.0);
    }
}

/// Values of magnitude in `[0.1, 1)` with random sign: no ReLU kink within h.
pub fn away_from_zero(seed: u64, n: usize) -> Vec<f64> {
    uniform(seed, n, 0.1, 1.0)
        .into_iter()
        .zip(uniform(seed ^ 1, n, -1.0, 1.0))
        .map(|(m, s)| if s < 0.0 { -m } else { m })
        .collect()
}

/// A shuffled grid with spacing 0.01: maxima are unique with a margin of
/// 10·h, so no pooling window changes its winner under a ±h probe.
pub fn distinct_values(seed: u64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 - n as f64 * 0.005).collect();
    let mut r = rng::seeded(seed);
    for i in (1..n).rev() {
        let j = rand::Rng::random_range(&mut r, 0..=i);
        v.swap(i, j);
    }
    v
}

/// Worst relative error of the softmax cross-entropy gradient with respect
/// to the logits.
pub fn check_loss(seed: u64, batch: usize) -> f64 {
    let logits = Tensor::from_vec(&[batch, 12], uniform(seed, batch * 12, -3.0, 3.0)).unwrap();
    let targets: Vec<usize> = (0..batch).map(|b| (seed as usize + 5 * b) % 12).collect();
    let (_, grad) = softmax_cross_entropy(&logits, &targets).unwrap();
    let mut worst = 0.0f64;
    for i in 0..logits.numel() {
        let mut p = logits.clone();
        p.data[i] += H;
        let (fp, _) = softmax_cross_entropy(&p, &targets).unwrap();
        p.data[i] -= 2.0 * H;
        let (fm, _) = softmax_cross_entropy(&p, &targets).unwrap();
        worst = worst.max(rel_error(grad.data[i], (fp - fm) / (2.0 * H)));
    }
    worst
}

/// One layer type and how to instantiate it for a given seed.
pub struct Case {
    pub name: &'static str,
    pub build: fn(u64) -> (Layer<f64>, Tensor<f64>, Mode, bool),
}

pub fn run_case(case: &Case, seeds: &[u64]) -> GradReport {
    let mut total = GradReport::default();
    for &s in seeds {
        let (layer, x, mode, skip) = (case.build)(s);
        total.merge(check_layer(&layer, &x, mode, s, skip));
    }
    total
}

use speechcmd_core::nn::{
    BatchNorm, Conv1d, Conv2d, Dense, Dropout, Flatten, GlobalAvgPool1d, MaxPool1d, MaxPool2d, Relu, ResidualBlock,
    Softmax,
};

fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor<f64> {
    Tensor::from_vec(shape, data).unwrap()
}

fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let n = shape.iter().product();
    tensor(shape, uniform(seed, n, -1.0, 1.0))
}

fn with_params(mut layer: Layer<f64>, seed: u64) -> Layer<f64> {
    randomize_params(&mut layer, seed);
    layer
}

/// Every layer type, including the strided even-kernel stem convolution and
/// batch norm in both modes.
pub fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "conv1d",
            build: |s| {
                let l = with_params(Layer::Conv1d(Conv1d::new(2, 3, 9, 1, &mut rng::seeded(s))), s);
                (l, random(&[2, 2, 12], s), Mode::Train, false)
            },
        },
        Case {
            name: "conv1d_strided_even_kernel",
            build: |s| {
                let l = with_params(Layer::Conv1d(Conv1d::new(2, 3, 8, 4, &mut rng::seeded(s))), s);
                (l, random(&[2, 2, 22], s), Mode::Train, false)
            },
        },
        Case {
            name: "conv2d",
            build: |s| {
                let l = with_params(Layer::Conv2d(Conv2d::new(2, 3, 3, &mut rng::seeded(s))), s);
                (l, random(&[2, 2, 5, 4], s), Mode::Train, false)
            },
        },
        Case {
            name: "batchnorm_train",
            build: |s| {
                let l = with_params(Layer::BatchNorm(BatchNorm::new(3)), s);
                (l, random(&[4, 3, 5], s), Mode::Train, false)
            },
        },
        Case {
            name: "batchnorm_train_dense",
            build: |s| {
                let l = with_params(Layer::BatchNorm(BatchNorm::new(4)), s);
                (l, random(&[6, 4], s), Mode::Train, false)
            },
        },
        Case {
            name: "batchnorm_eval",
            build: |s| {
                let mut l = with_params(Layer::BatchNorm(BatchNorm::new(3)), s);
                // Move the running statistics away from (0, 1) first.
                let prime = tensor(&[4, 3, 5], uniform(s ^ 9, 60, 0.5, 3.0));
                l.forward(&prime, Mode::Train).unwrap();
                (l, random(&[2, 3, 5], s), Mode::Eval, false)
            },
        },
        Case {
            name: "relu",
            build: |s| (Layer::Relu(Relu::new()), tensor(&[3, 4, 5], away_from_zero(s, 60)), Mode::Train, false),
        },
        Case {
            name: "maxpool1d",
            build: |s| (Layer::MaxPool1d(MaxPool1d::new(4)), tensor(&[2, 3, 12], distinct_values(s, 72)), Mode::Train, false),
        },
        Case {
            name: "maxpool2d",
            build: |s| {
                (Layer::MaxPool2d(MaxPool2d::new(2)), tensor(&[2, 2, 5, 7], distinct_values(s, 140)), Mode::Train, false)
            },
        },
        Case {
            name: "dense",
            build: |s| {
                let l = with_params(Layer::Dense(Dense::new(7, 5, &mut rng::seeded(s))), s);
                (l, random(&[3, 7], s), Mode::Train, false)
            },
        },
        Case {
            name: "dropout",
            build: |s| {
                let l = Layer::Dropout(Dropout::new(0.5, rng::seeded(s)).unwrap());
                (l, random(&[4, 10], s), Mode::Train, false)
            },
        },
        Case {
            name: "flatten",
            build: |s| (Layer::Flatten(Flatten::new()), random(&[2, 3, 4], s), Mode::Train, false),
        },
        Case {
            name: "global_avg_pool1d",
            build: |s| (Layer::GlobalAvgPool1d(GlobalAvgPool1d::new()), random(&[2, 3, 6], s), Mode::Train, false),
        },
        Case {
            name: "residual_block",
            build: |s| {
                let l = with_params(Layer::Residual(ResidualBlock::new(3, 3, &mut rng::seeded(s))), s);
                (l, random(&[3, 3, 8], s), Mode::Train, true)
            },
        },
        Case {
            name: "softmax",
            build: |s| (Layer::Softmax(Softmax::new()), random(&[3, 12], s), Mode::Train, false),
        },
    ]
}
