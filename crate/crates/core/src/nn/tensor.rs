use alloc::vec;
use alloc::vec::Vec;

use super::{dims_to_string, numel, shape_err, NnError, Scalar};

/// Row-major N-dimensional array. Parameters carry a gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
    pub grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); numel(shape)],
            grad: None,
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel(shape)],
            grad: None,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self, NnError> {
        if numel(shape) != data.len() {
            return Err(shape_err(alloc::format!(
                "{} elements for shape {}",
                data.len(),
                dims_to_string(shape)
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
            grad: None,
        })
    }

    /// Same data with a zeroed gradient buffer attached.
    pub fn into_param(mut self) -> Self {
        self.grad = Some(vec![T::zero(); self.data.len()]);
        self
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn reshaped(&self, shape: &[usize]) -> Result<Self, NnError> {
        Tensor::from_vec(shape, self.data.clone())
    }

    /// Element-type conversion (gradient dropped).
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
            grad: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks equally shaped examples into a batch `[n, ...shape]`.
    pub fn stack(shape: &[usize], examples: &[&[T]]) -> Result<Self, NnError> {
        let per = numel(shape);
        let mut data = Vec::with_capacity(per * examples.len());
        for ex in examples {
            if ex.len() != per {
                return Err(shape_err(alloc::format!(
                    "example of {} values for shape {}",
                    ex.len(),
                    dims_to_string(shape)
                )));
            }
            data.extend_from_slice(ex);
        }
        let mut full = vec![examples.len()];
        full.extend_from_slice(shape);
        Tensor::from_vec(&full, data)
    }
}
