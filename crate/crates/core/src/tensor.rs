//! Dense `[batch, channels, time]` arrays.
//!
//! Feature matrices (`[batch, features]`) are stored as tensors with a time
//! length of one.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub batch: usize,
    pub channels: usize,
    pub time: usize,
}

impl Shape {
    pub const fn new(batch: usize, channels: usize, time: usize) -> Self {
        Shape {
            batch,
            channels,
            time,
        }
    }

    pub const fn len(&self) -> usize {
        self.batch * self.channels * self.time
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.batch, self.channels, self.time)
    }
}

/// Row-major tensor; the time axis is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    shape: Shape,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![S::zero(); shape.len()],
        }
    }

    pub fn filled(shape: Shape, value: S) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<S>) -> Result<Self> {
        if shape.batch == 0 || shape.channels == 0 || shape.time == 0 {
            return Err(Error::shape("tensor", format!("zero-sized axis in {shape}")));
        }
        if data.len() != shape.len() {
            return Err(Error::shape(
                "tensor",
                format!("{} values supplied for shape {shape}", data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    /// `[batch, features]` matrix stored with `time == 1`.
    pub fn matrix(batch: usize, features: usize, data: Vec<S>) -> Result<Self> {
        Self::from_vec(Shape::new(batch, features, 1), data)
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for b in 0..shape.batch {
            for c in 0..shape.channels {
                for t in 0..shape.time {
                    data.push(f(b, c, t));
                }
            }
        }
        Tensor { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, t: usize) -> usize {
        (b * self.shape.channels + c) * self.shape.time + t
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, t: usize) -> S {
        self.data[self.index(b, c, t)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, t: usize, v: S) {
        let i = self.index(b, c, t);
        self.data[i] = v;
    }

    /// Time series of one channel of one sample.
    #[inline]
    pub fn row(&self, b: usize, c: usize) -> &[S] {
        let start = self.index(b, c, 0);
        &self.data[start..start + self.shape.time]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [S] {
        let start = self.index(b, c, 0);
        let t = self.shape.time;
        &mut self.data[start..start + t]
    }

    /// All channels of one sample, channel-major.
    pub fn sample(&self, b: usize) -> &[S] {
        let n = self.shape.channels * self.shape.time;
        &self.data[b * n..(b + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same values under a new shape with the same element count.
    pub fn reshape(&self, shape: Shape) -> Result<Self> {
        if shape.len() != self.shape.len() {
            return Err(Error::shape(
                "reshape",
                format!("cannot view {} as {shape}", self.shape),
            ));
        }
        Self::from_vec(shape, self.data.clone())
    }

    pub fn add_assign(&mut self, other: &Tensor<S>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "add",
                format!("{} vs {}", self.shape, other.shape),
            ));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|v| T::of(v.as_f64())).collect(),
        }
    }

    pub(crate) fn expect_shape(&self, op: &'static str, channels: usize) -> Result<()> {
        if self.shape.channels != channels {
            return Err(Error::shape(
                op,
                format!(
                    "expected {channels} input channels, got {} (input {})",
                    self.shape.channels, self.shape
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_time_contiguous() {
        let t = Tensor::<f64>::from_fn(Shape::new(2, 3, 4), |b, c, t| (b * 100 + c * 10 + t) as f64);
        assert_eq!(t.row(1, 2), &[120.0, 121.0, 122.0, 123.0]);
        assert_eq!(t.get(0, 1, 3), 13.0);
        assert_eq!(t.sample(1).len(), 12);
    }

    #[test]
    fn rejects_wrong_length_and_empty_axes() {
        assert!(Tensor::<f32>::from_vec(Shape::new(1, 2, 3), vec![0.0; 5]).is_err());
        assert!(Tensor::<f32>::from_vec(Shape::new(1, 0, 3), vec![]).is_err());
    }

    #[test]
    fn reshape_produces_new_instance() {
        let t = Tensor::<f32>::from_vec(Shape::new(1, 2, 3), vec![1.0; 6]).unwrap();
        let r = t.reshape(Shape::new(1, 6, 1)).unwrap();
        assert_eq!(t.shape(), Shape::new(1, 2, 3));
        assert_eq!(r.shape(), Shape::new(1, 6, 1));
        assert!(t.reshape(Shape::new(1, 5, 1)).is_err());
    }
}
