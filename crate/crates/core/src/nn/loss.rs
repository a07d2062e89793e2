use alloc::vec::Vec;

use super::{shape_err, NnError, Scalar, Tensor};

/// Max-subtracted softmax along the last axis.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let k = *logits.shape.last().ok_or_else(|| shape_err("softmax of a scalar"))?;
    if k == 0 {
        return Err(shape_err("softmax over an empty axis"));
    }
    let mut out = Vec::with_capacity(logits.numel());
    for row in logits.data.chunks_exact(k) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let start = out.len();
        let mut total = T::zero();
        for &v in row {
            let e = (v - m).exp();
            total += e;
            out.push(e);
        }
        for v in &mut out[start..] {
            *v /= total;
        }
    }
    Tensor::from_vec(&logits.shape, out)
}

/// Mean negative log-likelihood of `targets` under softmax(`logits`) and its
/// gradient `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    targets: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    if logits.rank() != 2 || logits.shape[0] != targets.len() {
        return Err(shape_err(alloc::format!(
            "cross entropy: logits {} for {} targets",
            super::dims_to_string(&logits.shape),
            targets.len()
        )));
    }
    let (batch, k) = (logits.shape[0], logits.shape[1]);
    let mut grad = softmax_rows(logits)?;
    let inv_batch = T::of(1.0 / batch as f64);
    let mut loss = T::zero();
    for (b, &t) in targets.iter().enumerate() {
        if t >= k {
            return Err(shape_err(alloc::format!("target {t} with {k} classes")));
        }
        let row = &logits.data[b * k..][..k];
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss += lse - row[t];
        grad.data[b * k + t] -= T::one();
    }
    grad.data.iter_mut().for_each(|g| *g *= inv_batch);
    Ok((loss * inv_batch, grad))
}
