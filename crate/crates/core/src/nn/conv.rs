use rand::Rng;
use rayon::prelude::*;

use super::init::fan_in_uniform;
use super::kernels::{correlate_accumulate, pad_into};
use super::{join_name, Layer, Mode, Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Stride-1, "same"-padded 1-D cross-correlation.
///
/// Weights are laid out `[c_out, c_in, k]`. The kernel size must be odd so
/// that `(k - 1) / 2` zeros on each side keep the time length unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d<S> {
    c_in: usize,
    c_out: usize,
    k: usize,
    pub weight: Param<S>,
    pub bias: Param<S>,
}

/// Zero-padded copy of the forward input, reused by the weight gradient.
#[derive(Clone, Debug)]
pub struct ConvCache<S> {
    padded: Vec<S>,
    input_shape: Shape,
}

impl<S: Scalar> Conv1d<S> {
    pub fn new<R: Rng + ?Sized>(c_in: usize, c_out: usize, k: usize, rng: &mut R) -> Result<Self> {
        Self::check_dims(c_in, c_out, k)?;
        let fan_in = c_in * k;
        let weight = fan_in_uniform(rng, fan_in, c_out * c_in * k);
        let bias = fan_in_uniform(rng, fan_in, c_out);
        Self::from_parts(c_in, c_out, k, weight, bias)
    }

    pub fn from_parts(c_in: usize, c_out: usize, k: usize, weight: Vec<S>, bias: Vec<S>) -> Result<Self> {
        Self::check_dims(c_in, c_out, k)?;
        if weight.len() != c_out * c_in * k || bias.len() != c_out {
            return Err(Error::shape(
                "conv1d",
                format!(
                    "weights {} / bias {} do not fit [{c_out}, {c_in}, {k}]",
                    weight.len(),
                    bias.len()
                ),
            ));
        }
        Ok(Conv1d {
            c_in,
            c_out,
            k,
            weight: Param::new(vec![c_out, c_in, k], weight),
            bias: Param::new(vec![c_out], bias),
        })
    }

    fn check_dims(c_in: usize, c_out: usize, k: usize) -> Result<()> {
        if c_in == 0 || c_out == 0 {
            return Err(Error::InvalidConfig("conv1d channel counts must be positive".into()));
        }
        if k % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "conv1d kernel size must be odd for same padding, got {k}"
            )));
        }
        Ok(())
    }

    pub fn in_channels(&self) -> usize {
        self.c_in
    }

    pub fn out_channels(&self) -> usize {
        self.c_out
    }

    pub fn kernel_size(&self) -> usize {
        self.k
    }

    pub fn padding(&self) -> usize {
        (self.k - 1) / 2
    }

    /// Parameter count `c_out·c_in·k + c_out`.
    pub fn param_count(c_in: usize, c_out: usize, k: usize) -> usize {
        c_out * c_in * k + c_out
    }

    #[inline]
    fn kernel(&self, co: usize, ci: usize) -> &[S] {
        let start = (co * self.c_in + ci) * self.k;
        &self.weight.value[start..start + self.k]
    }

    /// Forward pass without touching any state.
    pub fn apply(&self, input: &Tensor<S>) -> Result<(Tensor<S>, ConvCache<S>)> {
        input.expect_shape("conv1d", self.c_in)?;
        let shape = input.shape();
        let t = shape.time;
        let padded_len = t + self.k - 1;
        let pad = self.padding();

        let padded = if self.k == 1 {
            input.data().to_vec()
        } else {
            let mut padded = vec![S::zero(); shape.batch * self.c_in * padded_len];
            padded
                .par_chunks_mut(padded_len)
                .zip(input.data().par_chunks(t))
                .for_each(|(dst, row)| pad_into(dst, row, pad));
            padded
        };

        let out_shape = Shape::new(shape.batch, self.c_out, t);
        let mut out = Tensor::zeros(out_shape);
        out.data_mut()
            .par_chunks_mut(t)
            .enumerate()
            .for_each(|(row_idx, out_row)| {
                let (b, co) = (row_idx / self.c_out, row_idx % self.c_out);
                out_row.iter_mut().for_each(|v| *v = self.bias.value[co]);
                for ci in 0..self.c_in {
                    let start = (b * self.c_in + ci) * padded_len;
                    correlate_accumulate(out_row, &padded[start..start + padded_len], self.kernel(co, ci));
                }
            });
        Ok((
            out,
            ConvCache {
                padded,
                input_shape: shape,
            },
        ))
    }

    /// Accumulates weight and bias gradients; returns the input gradient.
    pub fn backprop(&mut self, cache: &ConvCache<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        let in_shape = cache.input_shape;
        let expected = Shape::new(in_shape.batch, self.c_out, in_shape.time);
        if grad_output.shape() != expected {
            return Err(Error::shape(
                "conv1d backward",
                format!("gradient {} does not match output {expected}", grad_output.shape()),
            ));
        }
        let (batch, t, k, c_in) = (in_shape.batch, in_shape.time, self.k, self.c_in);
        let padded_len = t + k - 1;
        let pad = self.padding();

        for co in 0..self.c_out {
            let mut acc = S::zero();
            for b in 0..batch {
                acc += super::kernels::sum(grad_output.row(b, co));
            }
            self.bias.grad[co] += acc;
        }

        let padded = &cache.padded;
        self.weight
            .grad
            .par_chunks_mut(c_in * k)
            .enumerate()
            .for_each(|(co, grad_rows)| {
                let mut local = vec![S::zero(); k];
                for ci in 0..c_in {
                    local.iter_mut().for_each(|v| *v = S::zero());
                    for b in 0..batch {
                        let start = (b * c_in + ci) * padded_len;
                        correlate_accumulate(&mut local, &padded[start..start + padded_len], grad_output.row(b, co));
                    }
                    for (g, &l) in grad_rows[ci * k..(ci + 1) * k].iter_mut().zip(&local) {
                        *g += l;
                    }
                }
            });

        // dx[i] = Σ_j w[k-1-j] · dy_padded[i + j]
        let dy_padded = if k == 1 {
            grad_output.data().to_vec()
        } else {
            let mut dyp = vec![S::zero(); batch * self.c_out * padded_len];
            dyp.par_chunks_mut(padded_len)
                .zip(grad_output.data().par_chunks(t))
                .for_each(|(dst, row)| pad_into(dst, row, pad));
            dyp
        };
        let reversed: Vec<S> = self
            .weight
            .value
            .chunks(k)
            .flat_map(|w| w.iter().rev().copied())
            .collect();
        let mut grad_input = Tensor::zeros(in_shape);
        grad_input
            .data_mut()
            .par_chunks_mut(t)
            .enumerate()
            .for_each(|(row_idx, dx)| {
                let (b, ci) = (row_idx / c_in, row_idx % c_in);
                for co in 0..self.c_out {
                    let start = (b * self.c_out + co) * padded_len;
                    let w = &reversed[(co * c_in + ci) * k..(co * c_in + ci + 1) * k];
                    correlate_accumulate(dx, &dy_padded[start..start + padded_len], w);
                }
            });
        Ok(grad_input)
    }
}

impl<S: Scalar> Parameterized<S> for Conv1d<S> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>)) {
        f(&join_name(prefix, "weight"), &self.weight);
        f(&join_name(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>)) {
        f(&join_name(prefix, "weight"), &mut self.weight);
        f(&join_name(prefix, "bias"), &mut self.bias);
    }
}

impl<S: Scalar> Layer<S> for Conv1d<S> {
    type Cache = ConvCache<S>;

    fn forward(&mut self, input: &Tensor<S>, _mode: Mode) -> Result<(Tensor<S>, ConvCache<S>)> {
        self.apply(input)
    }

    fn backward(&mut self, cache: &ConvCache<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        self.backprop(cache, grad_output)
    }
}
