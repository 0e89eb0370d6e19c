use rayon::prelude::*;

use super::{Layer, Mode, Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Stride-1 max pooling with −∞ padding, so the output keeps the input length.
///
/// The window for output `t` covers `[t - (k-1)/2, t + k/2]`. Ties resolve to
/// the lowest index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxPool1d {
    k: usize,
}

#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    argmax: Vec<u32>,
    shape: Shape,
}

impl MaxPool1d {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("max-pool kernel size must be positive".into()));
        }
        Ok(MaxPool1d { k })
    }

    pub fn kernel_size(&self) -> usize {
        self.k
    }

    pub fn apply<S: Scalar>(&self, input: &Tensor<S>) -> Result<(Tensor<S>, MaxPoolCache)> {
        let shape = input.shape();
        if shape.time < 1 {
            return Err(Error::shape("maxpool1d", "empty time axis"));
        }
        let t_len = shape.time;
        let left = (self.k - 1) / 2;
        let right = self.k - 1 - left;
        let mut out = Tensor::zeros(shape);
        let mut argmax = vec![0u32; shape.len()];
        out.data_mut()
            .par_chunks_mut(t_len)
            .zip(argmax.par_chunks_mut(t_len))
            .zip(input.data().par_chunks(t_len))
            .for_each(|((out_row, arg_row), row)| {
                for t in 0..t_len {
                    let lo = t.saturating_sub(left);
                    let hi = (t + right).min(t_len - 1);
                    let mut best = lo;
                    for i in lo + 1..=hi {
                        if row[i] > row[best] {
                            best = i;
                        }
                    }
                    out_row[t] = row[best];
                    arg_row[t] = best as u32;
                }
            });
        Ok((out, MaxPoolCache { argmax, shape }))
    }

    pub fn backprop<S: Scalar>(&self, cache: &MaxPoolCache, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        if grad_output.shape() != cache.shape {
            return Err(Error::shape(
                "maxpool1d backward",
                format!("gradient {} vs output {}", grad_output.shape(), cache.shape),
            ));
        }
        let t_len = cache.shape.time;
        let mut grad_input = Tensor::zeros(cache.shape);
        grad_input
            .data_mut()
            .par_chunks_mut(t_len)
            .zip(cache.argmax.par_chunks(t_len))
            .zip(grad_output.data().par_chunks(t_len))
            .for_each(|((dx, arg), dy)| {
                for (&a, &g) in arg.iter().zip(dy) {
                    dx[a as usize] += g;
                }
            });
        Ok(grad_input)
    }
}

impl<S: Scalar> Parameterized<S> for MaxPool1d {
    fn visit_params(&self, _: &str, _: &mut dyn FnMut(&str, &Param<S>)) {}
    fn visit_params_mut(&mut self, _: &str, _: &mut dyn FnMut(&str, &mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for MaxPool1d {
    type Cache = MaxPoolCache;

    fn forward(&mut self, input: &Tensor<S>, _mode: Mode) -> Result<(Tensor<S>, MaxPoolCache)> {
        self.apply(input)
    }

    fn backward(&mut self, cache: &MaxPoolCache, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        self.backprop(cache, grad_output)
    }
}

/// Mean over the time axis: `[B, C, T] -> [B, C, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GlobalAvgPool;

impl GlobalAvgPool {
    pub fn apply<S: Scalar>(&self, input: &Tensor<S>) -> Result<(Tensor<S>, Shape)> {
        let shape = input.shape();
        let inv = S::one() / S::of(shape.time as f64);
        let data = input
            .data()
            .chunks(shape.time)
            .map(|row| super::kernels::sum(row) * inv)
            .collect();
        Ok((Tensor::from_vec(Shape::new(shape.batch, shape.channels, 1), data)?, shape))
    }

    pub fn backprop<S: Scalar>(&self, input_shape: &Shape, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        let expected = Shape::new(input_shape.batch, input_shape.channels, 1);
        if grad_output.shape() != expected {
            return Err(Error::shape(
                "global average pool backward",
                format!("gradient {} vs output {expected}", grad_output.shape()),
            ));
        }
        let inv = S::one() / S::of(input_shape.time as f64);
        let mut dx = Tensor::zeros(*input_shape);
        for (row, &g) in dx.data_mut().chunks_mut(input_shape.time).zip(grad_output.data()) {
            row.iter_mut().for_each(|v| *v = g * inv);
        }
        Ok(dx)
    }
}

impl<S: Scalar> Parameterized<S> for GlobalAvgPool {
    fn visit_params(&self, _: &str, _: &mut dyn FnMut(&str, &Param<S>)) {}
    fn visit_params_mut(&mut self, _: &str, _: &mut dyn FnMut(&str, &mut Param<S>)) {}
}

impl<S: Scalar> Layer<S> for GlobalAvgPool {
    type Cache = Shape;

    fn forward(&mut self, input: &Tensor<S>, _mode: Mode) -> Result<(Tensor<S>, Shape)> {
        self.apply(input)
    }

    fn backward(&mut self, cache: &Shape, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        self.backprop(cache, grad_output)
    }
}
