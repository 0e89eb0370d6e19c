use super::{join_name, Layer, Mode, Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over the batch and time axes.
///
/// Only `gamma` and `beta` are parameters; the running mean and variance are
/// buffers. Before any training step the running estimates are mean 0 and
/// variance 1, so eval mode on a fresh layer is `gamma·x/√(1+ε) + beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm1d<S> {
    channels: usize,
    pub gamma: Param<S>,
    pub beta: Param<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    epsilon: f64,
    momentum: f64,
}

#[derive(Clone, Debug)]
pub struct BatchNormCache<S> {
    normalized: Tensor<S>,
    inv_std: Vec<S>,
    mode: Mode,
}

impl<S: Scalar> BatchNorm1d<S> {
    pub fn new(channels: usize) -> Self {
        Self::with_hyper(channels, BN_EPSILON, BN_MOMENTUM)
    }

    pub fn with_hyper(channels: usize, epsilon: f64, momentum: f64) -> Self {
        BatchNorm1d {
            channels,
            gamma: Param::new(vec![channels], vec![S::one(); channels]),
            beta: Param::zeros(vec![channels]),
            running_mean: vec![S::zero(); channels],
            running_var: vec![S::one(); channels],
            epsilon,
            momentum,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Eval-mode transform; never mutates state.
    pub fn apply_eval(&self, input: &Tensor<S>) -> Result<(Tensor<S>, BatchNormCache<S>)> {
        input.expect_shape("batchnorm1d", self.channels)?;
        let shape = input.shape();
        let eps = self.epsilon;
        let inv_std: Vec<S> = self
            .running_var
            .iter()
            .map(|v| S::of(1.0 / (v.as_f64() + eps).sqrt()))
            .collect();
        let mut normalized = Tensor::zeros(shape);
        let mut out = Tensor::zeros(shape);
        for b in 0..shape.batch {
            for c in 0..self.channels {
                let (mean, istd) = (self.running_mean[c], inv_std[c]);
                let (g, beta) = (self.gamma.value[c], self.beta.value[c]);
                let src = input.row(b, c);
                let norm_row = normalized.row_mut(b, c);
                for (n, &x) in norm_row.iter_mut().zip(src) {
                    *n = (x - mean) * istd;
                }
                let dst = out.row_mut(b, c);
                for (o, &n) in dst.iter_mut().zip(normalized.row(b, c)) {
                    *o = g * n + beta;
                }
            }
        }
        Ok((
            out,
            BatchNormCache {
                normalized,
                inv_std,
                mode: Mode::Eval,
            },
        ))
    }

    /// Train-mode transform with batch statistics; updates running estimates.
    pub fn apply_train(&mut self, input: &Tensor<S>) -> Result<(Tensor<S>, BatchNormCache<S>)> {
        input.expect_shape("batchnorm1d", self.channels)?;
        let shape = input.shape();
        let n = shape.batch * shape.time;
        if n < 2 {
            return Err(Error::shape(
                "batchnorm1d",
                format!("train mode needs at least 2 values per channel, input is {shape}"),
            ));
        }
        let mut normalized = Tensor::zeros(shape);
        let mut out = Tensor::zeros(shape);
        let mut inv_std = vec![S::zero(); self.channels];
        let m = self.momentum;
        for c in 0..self.channels {
            // statistics accumulated in f64 in a fixed (batch, time) order
            let mut sum = 0.0;
            for b in 0..shape.batch {
                sum += input.row(b, c).iter().map(|v| v.as_f64()).sum::<f64>();
            }
            let mean = sum / n as f64;
            let mut sq = 0.0;
            for b in 0..shape.batch {
                sq += input
                    .row(b, c)
                    .iter()
                    .map(|v| {
                        let d = v.as_f64() - mean;
                        d * d
                    })
                    .sum::<f64>();
            }
            let var = sq / n as f64;
            let istd = 1.0 / (var + self.epsilon).sqrt();
            inv_std[c] = S::of(istd);
            let (mean_s, istd_s) = (S::of(mean), S::of(istd));
            let (g, beta) = (self.gamma.value[c], self.beta.value[c]);
            for b in 0..shape.batch {
                let src = input.row(b, c);
                let norm_row = normalized.row_mut(b, c);
                for (dst, &x) in norm_row.iter_mut().zip(src) {
                    *dst = (x - mean_s) * istd_s;
                }
                let dst = out.row_mut(b, c);
                for (o, &nv) in dst.iter_mut().zip(normalized.row(b, c)) {
                    *o = g * nv + beta;
                }
            }
            let unbiased = sq / (n - 1) as f64;
            self.running_mean[c] = S::of((1.0 - m) * self.running_mean[c].as_f64() + m * mean);
            self.running_var[c] = S::of((1.0 - m) * self.running_var[c].as_f64() + m * unbiased);
        }
        Ok((
            out,
            BatchNormCache {
                normalized,
                inv_std,
                mode: Mode::Train,
            },
        ))
    }

    pub fn backprop(&mut self, cache: &BatchNormCache<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        let shape = cache.normalized.shape();
        if grad_output.shape() != shape {
            return Err(Error::shape(
                "batchnorm1d backward",
                format!("gradient {} vs output {shape}", grad_output.shape()),
            ));
        }
        let n = (shape.batch * shape.time) as f64;
        let mut dx = Tensor::zeros(shape);
        for c in 0..self.channels {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for b in 0..shape.batch {
                for (&dy, &xh) in grad_output.row(b, c).iter().zip(cache.normalized.row(b, c)) {
                    sum_dy += dy.as_f64();
                    sum_dy_xhat += (dy * xh).as_f64();
                }
            }
            self.beta.grad[c] += S::of(sum_dy);
            self.gamma.grad[c] += S::of(sum_dy_xhat);
            let scale = self.gamma.value[c] * cache.inv_std[c];
            match cache.mode {
                Mode::Eval => {
                    for b in 0..shape.batch {
                        let dy = grad_output.row(b, c);
                        for (d, &g) in dx.row_mut(b, c).iter_mut().zip(dy) {
                            *d = scale * g;
                        }
                    }
                }
                Mode::Train => {
                    // dx = γ·istd·(dy − mean(dy) − x̂·mean(dy·x̂))
                    let mean_dy = S::of(sum_dy / n);
                    let mean_dy_xhat = S::of(sum_dy_xhat / n);
                    for b in 0..shape.batch {
                        let dy = grad_output.row(b, c);
                        let xh = cache.normalized.row(b, c);
                        for ((d, &g), &x) in dx.row_mut(b, c).iter_mut().zip(dy).zip(xh) {
                            *d = scale * (g - mean_dy - x * mean_dy_xhat);
                        }
                    }
                }
            }
        }
        Ok(dx)
    }
}

impl<S: Scalar> Parameterized<S> for BatchNorm1d<S> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>)) {
        f(&join_name(prefix, "gamma"), &self.gamma);
        f(&join_name(prefix, "beta"), &self.beta);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>)) {
        f(&join_name(prefix, "gamma"), &mut self.gamma);
        f(&join_name(prefix, "beta"), &mut self.beta);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[S])) {
        f(&join_name(prefix, "running_mean"), &self.running_mean);
        f(&join_name(prefix, "running_var"), &self.running_var);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Vec<S>)) {
        f(&join_name(prefix, "running_mean"), &mut self.running_mean);
        f(&join_name(prefix, "running_var"), &mut self.running_var);
    }
}

impl<S: Scalar> Layer<S> for BatchNorm1d<S> {
    type Cache = BatchNormCache<S>;

    fn forward(&mut self, input: &Tensor<S>, mode: Mode) -> Result<(Tensor<S>, BatchNormCache<S>)> {
        match mode {
            Mode::Train => self.apply_train(input),
            Mode::Eval => self.apply_eval(input),
        }
    }

    fn backward(&mut self, cache: &BatchNormCache<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        self.backprop(cache, grad_output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;
    use crate::tensor::Shape;

    #[test]
    fn standardized_input_is_nearly_fixed_point() {
        // per channel: mean 0, population variance 1
        let x = Tensor::from_vec(Shape::new(2, 1, 2), vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let mut bn = BatchNorm1d::<f64>::new(1);
        let (y, _) = bn.apply_train(&x).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_channel_maps_to_beta() {
        let x = Tensor::filled(Shape::new(3, 2, 5), 4.2);
        let mut bn = BatchNorm1d::<f64>::new(2);
        bn.beta.value = vec![0.3, -0.7];
        let (y, _) = bn.apply_train(&x).unwrap();
        for b in 0..3 {
            assert!(y.row(b, 0).iter().all(|v| (v - 0.3).abs() < 1e-9));
            assert!(y.row(b, 1).iter().all(|v| (v + 0.7).abs() < 1e-9));
        }
    }

    #[test]
    fn running_statistics_follow_momentum() {
        let x = Tensor::from_vec(Shape::new(1, 1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut bn = BatchNorm1d::<f64>::new(1);
        bn.apply_train(&x).unwrap();
        assert!((bn.running_mean[0] - 0.25).abs() < 1e-12);
        // unbiased variance of 1..4 is 5/3
        assert!((bn.running_var[0] - (0.9 + 0.1 * 5.0 / 3.0)).abs() < 1e-12);
        assert!(bn.running_var.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn eval_before_training_uses_initial_statistics() {
        let x = Tensor::from_vec(Shape::new(1, 1, 2), vec![2.0, -2.0]).unwrap();
        let bn = BatchNorm1d::<f64>::new(1);
        let (y, _) = bn.apply_eval(&x).unwrap();
        let s = 1.0 / (1.0 + BN_EPSILON).sqrt();
        assert!((y.data()[0] - 2.0 * s).abs() < 1e-12);
    }

    #[test]
    fn single_value_per_channel_rejected_in_train_mode() {
        let mut bn = BatchNorm1d::<f64>::new(1);
        assert!(bn.apply_train(&Tensor::zeros(Shape::new(1, 1, 1))).is_err());
    }

    #[test]
    fn learnable_parameter_count_is_two_per_channel() {
        assert_eq!(BatchNorm1d::<f32>::new(48).num_params(), 96);
    }

    #[test]
    fn gradients_match_finite_differences_in_both_modes() {
        let x = Tensor::from_fn(Shape::new(3, 2, 5), |b, c, t| ((b * 13 + c * 5 + t * 7) % 11) as f64 * 0.2 - 1.0);
        let mut bn = BatchNorm1d::<f64>::new(2);
        bn.gamma.value = vec![1.3, -0.6];
        bn.beta.value = vec![0.2, 0.5];
        for mode in [Mode::Train, Mode::Eval] {
            let report = grad_check(&bn, &x, mode, 1e-5, 9).unwrap();
            assert!(report.max_rel_error <= 1e-4, "{mode:?}: {report:?}");
        }
    }
}
