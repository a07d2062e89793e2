use alloc::vec;
use alloc::vec::Vec;

use super::{expect_rank, expect_shape, he_uniform, Module};
use crate::nn::kernels::{axpy, dot, sum};
use crate::nn::{shape_err, Mode, NnError, Scalar, Tensor};
use crate::rng::Rng;

/// 1D cross-correlation with "same" zero padding: output length is
/// `ceil(L / stride)`. Odd kernels pad symmetrically; an even kernel puts the
/// extra zero on the right.
#[derive(Debug, Clone)]
pub struct Conv1d<T: Scalar> {
    /// `[out_channels, in_channels, kernel]`
    pub weight: Tensor<T>,
    /// `[out_channels]`
    pub bias: Tensor<T>,
    pub stride: usize,
    cache: Option<Conv1dCache<T>>,
}

#[derive(Debug, Clone)]
struct Conv1dCache<T> {
    padded: Vec<T>,
    batch: usize,
    in_len: usize,
    padded_len: usize,
    pad_left: usize,
    out_len: usize,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, rng: &mut Rng) -> Self {
        Conv1d {
            weight: he_uniform(&[out_channels, in_channels, kernel], in_channels * kernel, rng),
            bias: Tensor::zeros(&[out_channels]).into_param(),
            stride: stride.max(1),
            cache: None,
        }
    }

    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>, stride: usize) -> Result<Self, NnError> {
        expect_rank(&weight, 3, "conv1d weight")?;
        expect_shape(&bias, &weight.shape[..1], "conv1d bias")?;
        if stride == 0 {
            return Err(shape_err("conv1d stride must be positive"));
        }
        Ok(Conv1d {
            weight: weight.into_param(),
            bias: bias.into_param(),
            stride,
            cache: None,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }
    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }
    pub fn kernel(&self) -> usize {
        self.weight.shape[2]
    }

    /// `(out_len, pad_left, padded_len)` for an input of `in_len` samples.
    pub fn geometry(&self, in_len: usize) -> (usize, usize, usize) {
        let k = self.kernel();
        let out_len = in_len.div_ceil(self.stride);
        let pad_total = ((out_len.max(1) - 1) * self.stride + k).saturating_sub(in_len);
        (out_len, pad_total / 2, in_len + pad_total)
    }
}

impl<T: Scalar> Module<T> for Conv1d<T> {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        expect_rank(input, 3, "conv1d")?;
        let (batch, cin, len) = (input.shape[0], input.shape[1], input.shape[2]);
        if cin != self.in_channels() {
            return Err(shape_err(alloc::format!(
                "conv1d expects {} input channels, got {cin}",
                self.in_channels()
            )));
        }
        let (cout, k, stride) = (self.out_channels(), self.kernel(), self.stride);
        let (out_len, pad_left, plen) = self.geometry(len);

        let mut padded = vec![T::zero(); batch * cin * plen];
        for row in 0..batch * cin {
            padded[row * plen + pad_left..row * plen + pad_left + len]
                .copy_from_slice(&input.data[row * len..(row + 1) * len]);
        }

        let mut out = vec![T::zero(); batch * cout * out_len];
        let w = &self.weight.data;
        for b in 0..batch {
            for oc in 0..cout {
                let orow = &mut out[(b * cout + oc) * out_len..][..out_len];
                orow.iter_mut().for_each(|v| *v = self.bias.data[oc]);
                for ic in 0..cin {
                    let xrow = &padded[(b * cin + ic) * plen..][..plen];
                    let wrow = &w[(oc * cin + ic) * k..][..k];
                    if stride == 1 {
                        for (kk, &wk) in wrow.iter().enumerate() {
                            axpy(wk, &xrow[kk..kk + out_len], orow);
                        }
                    } else {
                        for (t, o) in orow.iter_mut().enumerate() {
                            *o += dot(wrow, &xrow[t * stride..t * stride + k]);
                        }
                    }
                }
            }
        }
        self.cache = Some(Conv1dCache {
            padded,
            batch,
            in_len: len,
            padded_len: plen,
            pad_left,
            out_len,
        });
        Tensor::from_vec(&[batch, cout, out_len], out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let cache = self.cache.as_ref().ok_or(NnError::MissingForwardCache)?;
        let (cin, cout, k, stride) = (self.in_channels(), self.out_channels(), self.kernel(), self.stride);
        let Conv1dCache {
            padded,
            batch,
            in_len,
            padded_len: plen,
            pad_left,
            out_len,
        } = cache;
        let (batch, plen, out_len) = (*batch, *plen, *out_len);
        expect_shape(grad_output, &[batch, cout, out_len], "conv1d backward")?;

        let mut gpad = vec![T::zero(); batch * cin * plen];
        let w = &self.weight.data;
        let gw = self.weight.grad.as_mut().expect("param grad");
        let gb = self.bias.grad.as_mut().expect("param grad");
        for b in 0..batch {
            for oc in 0..cout {
                let grow = &grad_output.data[(b * cout + oc) * out_len..][..out_len];
                gb[oc] += sum(grow);
                for ic in 0..cin {
                    let xrow = &padded[(b * cin + ic) * plen..][..plen];
                    let gxrow = &mut gpad[(b * cin + ic) * plen..][..plen];
                    let base = (oc * cin + ic) * k;
                    if stride == 1 {
                        for kk in 0..k {
                            gw[base + kk] += dot(grow, &xrow[kk..kk + out_len]);
                            axpy(w[base + kk], grow, &mut gxrow[kk..kk + out_len]);
                        }
                    } else {
                        let wrow = &w[base..base + k];
                        let gwrow = &mut gw[base..base + k];
                        for (t, &g) in grow.iter().enumerate() {
                            axpy(g, &xrow[t * stride..t * stride + k], gwrow);
                            axpy(g, wrow, &mut gxrow[t * stride..t * stride + k]);
                        }
                    }
                }
            }
        }
        let mut gx = Vec::with_capacity(batch * cin * in_len);
        for row in 0..batch * cin {
            gx.extend_from_slice(&gpad[row * plen + pad_left..row * plen + pad_left + in_len]);
        }
        Tensor::from_vec(&[batch, cin, *in_len], gx)
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// 2D cross-correlation, stride 1, "same" padding with an odd square kernel.
#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar> {
    /// `[out_channels, in_channels, kernel, kernel]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    cache: Option<Conv2dCache<T>>,
}

#[derive(Debug, Clone)]
struct Conv2dCache<T> {
    padded: Vec<T>,
    batch: usize,
    height: usize,
    width: usize,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut Rng) -> Self {
        Conv2d {
            weight: he_uniform(
                &[out_channels, in_channels, kernel, kernel],
                in_channels * kernel * kernel,
                rng,
            ),
            bias: Tensor::zeros(&[out_channels]).into_param(),
            cache: None,
        }
    }

    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self, NnError> {
        expect_rank(&weight, 4, "conv2d weight")?;
        if weight.shape[2] != weight.shape[3] || weight.shape[2] % 2 == 0 {
            return Err(shape_err("conv2d kernel must be square and odd"));
        }
        expect_shape(&bias, &weight.shape[..1], "conv2d bias")?;
        Ok(Conv2d {
            weight: weight.into_param(),
            bias: bias.into_param(),
            cache: None,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }
    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }
    pub fn kernel(&self) -> usize {
        self.weight.shape[2]
    }
}

impl<T: Scalar> Module<T> for Conv2d<T> {
    fn forward(&mut self, input: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>, NnError> {
        expect_rank(input, 4, "conv2d")?;
        let (batch, cin, h, w) = (input.shape[0], input.shape[1], input.shape[2], input.shape[3]);
        if cin != self.in_channels() {
            return Err(shape_err(alloc::format!(
                "conv2d expects {} input channels, got {cin}",
                self.in_channels()
            )));
        }
        let (cout, k) = (self.out_channels(), self.kernel());
        let p = k / 2;
        let (hp, wp) = (h + 2 * p, w + 2 * p);
        let mut padded = vec![T::zero(); batch * cin * hp * wp];
        for plane in 0..batch * cin {
            for y in 0..h {
                padded[plane * hp * wp + (y + p) * wp + p..][..w]
                    .copy_from_slice(&input.data[plane * h * w + y * w..][..w]);
            }
        }
        let mut out = vec![T::zero(); batch * cout * h * w];
        let wt = &self.weight.data;
        for b in 0..batch {
            for oc in 0..cout {
                let oplane = &mut out[(b * cout + oc) * h * w..][..h * w];
                oplane.iter_mut().for_each(|v| *v = self.bias.data[oc]);
                for ic in 0..cin {
                    let xplane = &padded[(b * cin + ic) * hp * wp..][..hp * wp];
                    for ky in 0..k {
                        for kx in 0..k {
                            let wv = wt[((oc * cin + ic) * k + ky) * k + kx];
                            for y in 0..h {
                                axpy(wv, &xplane[(y + ky) * wp + kx..][..w], &mut oplane[y * w..][..w]);
                            }
                        }
                    }
                }
            }
        }
        self.cache = Some(Conv2dCache {
            padded,
            batch,
            height: h,
            width: w,
        });
        Tensor::from_vec(&[batch, cout, h, w], out)
    }

    fn backward(&mut self, grad_output: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let cache = self.cache.as_ref().ok_or(NnError::MissingForwardCache)?;
        let (cin, cout, k) = (self.in_channels(), self.out_channels(), self.kernel());
        let (batch, h, w) = (cache.batch, cache.height, cache.width);
        expect_shape(grad_output, &[batch, cout, h, w], "conv2d backward")?;
        let p = k / 2;
        let (hp, wp) = (h + 2 * p, w + 2 * p);
        let mut gpad = vec![T::zero(); batch * cin * hp * wp];
        let wt = &self.weight.data;
        let gw = self.weight.grad.as_mut().expect("param grad");
        let gb = self.bias.grad.as_mut().expect("param grad");
        for b in 0..batch {
            for oc in 0..cout {
                let gplane = &grad_output.data[(b * cout + oc) * h * w..][..h * w];
                gb[oc] += sum(gplane);
                for ic in 0..cin {
                    let xplane = &cache.padded[(b * cin + ic) * hp * wp..][..hp * wp];
                    let gxplane = &mut gpad[(b * cin + ic) * hp * wp..][..hp * wp];
                    for ky in 0..k {
                        for kx in 0..k {
                            let idx = ((oc * cin + ic) * k + ky) * k + kx;
                            let wv = wt[idx];
                            let mut acc = T::zero();
                            for y in 0..h {
                                let grow = &gplane[y * w..][..w];
                                acc += dot(grow, &xplane[(y + ky) * wp + kx..][..w]);
                                axpy(wv, grow, &mut gxplane[(y + ky) * wp + kx..][..w]);
                            }
                            gw[idx] += acc;
                        }
                    }
                }
            }
        }
        let mut gx = Vec::with_capacity(batch * cin * h * w);
        for plane in 0..batch * cin {
            for y in 0..h {
                gx.extend_from_slice(&gpad[plane * hp * wp + (y + p) * wp + p..][..w]);
            }
        }
        Tensor::from_vec(&[batch, cin, h, w], gx)
    }

    fn params(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
