use rand::Rng;

use super::init::fan_in_uniform;
use super::{join_name, Layer, Mode, Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Affine map on `[batch, features]` (time length 1) inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<S> {
    inputs: usize,
    outputs: usize,
    /// `[outputs, inputs]`
    pub weight: Param<S>,
    pub bias: Param<S>,
}

impl<S: Scalar> Linear<S> {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        let weight = fan_in_uniform(rng, inputs, inputs * outputs);
        let bias = fan_in_uniform(rng, inputs, outputs);
        Self::from_parts(inputs, outputs, weight, bias)
    }

    pub fn from_parts(inputs: usize, outputs: usize, weight: Vec<S>, bias: Vec<S>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidConfig("linear layer sizes must be positive".into()));
        }
        if weight.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::shape(
                "linear",
                format!("weights {} / bias {} do not fit [{outputs}, {inputs}]", weight.len(), bias.len()),
            ));
        }
        Ok(Linear {
            inputs,
            outputs,
            weight: Param::new(vec![outputs, inputs], weight),
            bias: Param::new(vec![outputs], bias),
        })
    }

    pub fn param_count(inputs: usize, outputs: usize) -> usize {
        inputs * outputs + outputs
    }

    fn check_input(&self, input: &Tensor<S>) -> Result<()> {
        let s = input.shape();
        if s.time != 1 || s.channels != self.inputs {
            return Err(Error::shape(
                "linear",
                format!("expected [B, {}, 1], got {s}", self.inputs),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        self.check_input(input)?;
        let batch = input.shape().batch;
        let mut out = Vec::with_capacity(batch * self.outputs);
        for b in 0..batch {
            let x = input.sample(b);
            for o in 0..self.outputs {
                let w = &self.weight.value[o * self.inputs..(o + 1) * self.inputs];
                let dot = w.iter().zip(x).fold(S::zero(), |acc, (&wi, &xi)| acc + wi * xi);
                out.push(dot + self.bias.value[o]);
            }
        }
        Tensor::matrix(batch, self.outputs, out)
    }

    pub fn backprop(&mut self, input: &Tensor<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        let batch = input.shape().batch;
        if grad_output.shape() != Shape::new(batch, self.outputs, 1) {
            return Err(Error::shape(
                "linear backward",
                format!("gradient {} for {batch} x {} output", grad_output.shape(), self.outputs),
            ));
        }
        let mut dx = vec![S::zero(); batch * self.inputs];
        for b in 0..batch {
            let x = input.sample(b);
            let dy = grad_output.sample(b);
            let dxb = &mut dx[b * self.inputs..(b + 1) * self.inputs];
            for (o, &g) in dy.iter().enumerate() {
                self.bias.grad[o] += g;
                let row = o * self.inputs..(o + 1) * self.inputs;
                for ((gw, &xi), (d, &w)) in self.weight.grad[row.clone()]
                    .iter_mut()
                    .zip(x)
                    .zip(dxb.iter_mut().zip(&self.weight.value[row]))
                {
                    *gw += g * xi;
                    *d += g * w;
                }
            }
        }
        Tensor::matrix(batch, self.inputs, dx)
    }
}

impl<S: Scalar> Parameterized<S> for Linear<S> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>)) {
        f(&join_name(prefix, "weight"), &self.weight);
        f(&join_name(prefix, "bias"), &self.bias);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>)) {
        f(&join_name(prefix, "weight"), &mut self.weight);
        f(&join_name(prefix, "bias"), &mut self.bias);
    }
}

impl<S: Scalar> Layer<S> for Linear<S> {
    type Cache = Tensor<S>;

    fn forward(&mut self, input: &Tensor<S>, _mode: Mode) -> Result<(Tensor<S>, Tensor<S>)> {
        Ok((self.apply(input)?, input.clone()))
    }

    fn backward(&mut self, cache: &Tensor<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        self.backprop(cache, grad_output)
    }
}
