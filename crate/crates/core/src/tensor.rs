//! Dense row-major `[T, N, C]` storage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    shape: [usize; 3],
    data: Vec<T>,
}

impl<T: Clone> Tensor3<T> {
    pub fn filled(shape: [usize; 3], value: T) -> Self {
        Self {
            shape,
            data: vec![value; shape[0] * shape[1] * shape[2]],
        }
    }
}

impl<T> Tensor3<T> {
    pub fn from_vec(shape: [usize; 3], data: Vec<T>) -> Result<Self> {
        let expected = shape[0] * shape[1] * shape[2];
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, t: usize, n: usize, c: usize) -> usize {
        debug_assert!(t < self.shape[0] && n < self.shape[1] && c < self.shape[2]);
        (t * self.shape[1] + n) * self.shape[2] + c
    }

    #[inline]
    pub fn get(&self, t: usize, n: usize, c: usize) -> &T {
        &self.data[self.offset(t, n, c)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, n: usize, c: usize, value: T) {
        let i = self.offset(t, n, c);
        self.data[i] = value;
    }

    /// All `N * C` entries of timestep `t`.
    pub fn frame(&self, t: usize) -> &[T] {
        let w = self.shape[1] * self.shape[2];
        &self.data[t * w..(t + 1) * w]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [T] {
        let w = self.shape[1] * self.shape[2];
        &mut self.data[t * w..(t + 1) * w]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

/// Real values with an observation mask of the same shape (`true` = usable).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedTensor {
    pub values: Tensor3<f64>,
    pub mask: Tensor3<bool>,
}

impl MaskedTensor {
    pub fn new(values: Tensor3<f64>, mask: Tensor3<bool>) -> Result<Self> {
        if values.shape() != mask.shape() {
            return Err(Error::ShapeMismatch {
                expected: values.len(),
                found: mask.len(),
            });
        }
        Ok(Self { values, mask })
    }

    /// All-zero values with every cell masked out.
    pub fn empty(shape: [usize; 3]) -> Self {
        Self {
            values: Tensor3::filled(shape, 0.0),
            mask: Tensor3::filled(shape, false),
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.values.shape()
    }

    /// The value at a cell when it is observed.
    #[inline]
    pub fn observed(&self, t: usize, n: usize, c: usize) -> Option<f64> {
        let i = self.values.offset(t, n, c);
        if self.mask.as_slice()[i] {
            Some(self.values.as_slice()[i])
        } else {
            None
        }
    }

    pub fn count_observed(&self) -> usize {
        self.mask.as_slice().iter().filter(|m| **m).count()
    }
}
