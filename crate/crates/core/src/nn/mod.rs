//! Minimal differentiable layer library.
//!
//! Every layer exposes an explicit forward pass returning its output and a
//! cache, and a backward pass that consumes the cache, accumulates parameter
//! gradients in place and returns the gradient with respect to its input.
//! There is no tape; composite modules chain these calls by hand.

mod activation;
mod adam;
mod batchnorm;
mod concat;
mod conv;
mod gradcheck;
mod init;
pub(crate) mod kernels;
mod linear;
mod loss;
mod pool;

pub use activation::{relu, relu_backward, Relu};
pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use batchnorm::{BatchNorm1d, BatchNormCache, BN_EPSILON, BN_MOMENTUM};
pub use concat::{concat_channels, split_channels};
pub use conv::{Conv1d, ConvCache};
pub use gradcheck::{finite_difference_error, grad_check, GradCheckReport};
pub use init::fan_in_uniform;
pub use linear::Linear;
pub use loss::{softmax, softmax_cross_entropy};
pub use pool::{GlobalAvgPool, MaxPool1d, MaxPoolCache};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Whether batch normalization uses batch statistics (and updates its running
/// estimates) or the stored running estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// A learnable tensor together with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<S> {
    pub value: Vec<S>,
    pub grad: Vec<S>,
    dims: Vec<usize>,
}

impl<S: Scalar> Param<S> {
    pub fn new(dims: Vec<usize>, value: Vec<S>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), value.len());
        let grad = vec![S::zero(); value.len()];
        Param { value, grad, dims }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self::new(dims, vec![S::zero(); n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = S::zero());
    }
}

pub(crate) fn join_name(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Named, ordered access to learnable parameters and non-learnable state.
///
/// The visiting order is stable: the optimizer, the serializer and the
/// gradient checker all rely on it.
pub trait Parameterized<S: Scalar> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>));

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>));

    /// Running statistics and similar state that is saved but not trained.
    fn visit_buffers(&self, _prefix: &str, _f: &mut dyn FnMut(&str, &[S])) {}

    fn visit_buffers_mut(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut Vec<S>)) {}

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit_params("", &mut |_, p| n += p.len());
        n
    }

    fn zero_grad(&mut self) {
        self.visit_params_mut("", &mut |_, p| p.zero_grad());
    }

    /// All parameter values concatenated in visiting order.
    fn flat_params(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit_params("", &mut |_, p| out.extend_from_slice(&p.value));
        out
    }

    /// All parameter gradients concatenated in visiting order.
    fn flat_grads(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit_params("", &mut |_, p| out.extend_from_slice(&p.grad));
        out
    }

    /// Overwrites parameter values from a flat vector in visiting order.
    fn set_flat_params(&mut self, values: &[S]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(crate::error::Error::shape(
                "set_flat_params",
                format!("{} values for {} parameters", values.len(), self.num_params()),
            ));
        }
        let mut offset = 0;
        self.visit_params_mut("", &mut |_, p| {
            let n = p.len();
            p.value.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        });
        Ok(())
    }
}

/// A single-input differentiable layer.
pub trait Layer<S: Scalar>: Parameterized<S> {
    type Cache;

    fn forward(&mut self, input: &Tensor<S>, mode: Mode) -> Result<(Tensor<S>, Self::Cache)>;

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, cache: &Self::Cache, grad_output: &Tensor<S>) -> Result<Tensor<S>>;
}
