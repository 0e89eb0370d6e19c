use rand::Rng;

use crate::error::Result;
use crate::nn::{join_name, relu, relu_backward, BatchNorm1d, BatchNormCache, Conv1d, ConvCache, Mode, Param, Parameterized};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Shortcut `ReLU(main + BN(conv1x1(tap)))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualProjection<S> {
    pub conv: Conv1d<S>,
    pub bn: BatchNorm1d<S>,
}

#[derive(Clone, Debug)]
pub struct ResidualCache<S> {
    conv: ConvCache<S>,
    bn: BatchNormCache<S>,
    summed: Tensor<S>,
}

impl<S: Scalar> ResidualProjection<S> {
    pub fn new<R: Rng + ?Sized>(in_channels: usize, out_channels: usize, rng: &mut R) -> Result<Self> {
        Ok(ResidualProjection {
            conv: Conv1d::new(in_channels, out_channels, 1, rng)?,
            bn: BatchNorm1d::new(out_channels),
        })
    }

    pub fn forward(&mut self, tap: &Tensor<S>, main: &Tensor<S>, mode: Mode) -> Result<(Tensor<S>, ResidualCache<S>)> {
        let (projected, conv) = self.conv.apply(tap)?;
        let (mut summed, bn) = match mode {
            Mode::Train => self.bn.apply_train(&projected)?,
            Mode::Eval => self.bn.apply_eval(&projected)?,
        };
        summed.add_assign(main)?;
        Ok((relu(&summed), ResidualCache { conv, bn, summed }))
    }

    pub fn predict(&self, tap: &Tensor<S>, main: &Tensor<S>) -> Result<Tensor<S>> {
        let (projected, _) = self.conv.apply(tap)?;
        let (mut summed, _) = self.bn.apply_eval(&projected)?;
        summed.add_assign(main)?;
        Ok(relu(&summed))
    }

    /// Returns the gradients with respect to `(tap, main)`.
    pub fn backward(&mut self, cache: &ResidualCache<S>, grad_output: &Tensor<S>) -> Result<(Tensor<S>, Tensor<S>)> {
        let d_summed = relu_backward(&cache.summed, grad_output)?;
        let d_projected = self.bn.backprop(&cache.bn, &d_summed)?;
        let d_tap = self.conv.backprop(&cache.conv, &d_projected)?;
        Ok((d_tap, d_summed))
    }
}

impl<S: Scalar> Parameterized<S> for ResidualProjection<S> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>)) {
        self.conv.visit_params(&join_name(prefix, "conv"), f);
        self.bn.visit_params(&join_name(prefix, "bn"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>)) {
        self.conv.visit_params_mut(&join_name(prefix, "conv"), f);
        self.bn.visit_params_mut(&join_name(prefix, "bn"), f);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[S])) {
        self.bn.visit_buffers(&join_name(prefix, "bn"), f);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Vec<S>)) {
        self.bn.visit_buffers_mut(&join_name(prefix, "bn"), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zeroed_projection_reduces_to_rectified_main_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut res = ResidualProjection::<f64>::new(3, 4, &mut rng).unwrap();
        res.conv.weight.value.iter_mut().for_each(|w| *w = 0.0);
        res.conv.bias.value.iter_mut().for_each(|b| *b = 0.0);
        let tap = Tensor::from_fn(Shape::new(2, 3, 5), |b, c, t| (b + c + t) as f64);
        let main = Tensor::from_fn(Shape::new(2, 4, 5), |b, c, t| (b as f64 - c as f64) * 0.5 + t as f64 * 0.1 - 0.4);
        let y = res.predict(&tap, &main).unwrap();
        assert_eq!(y, relu(&main));
    }

    #[test]
    fn projection_has_expected_parameter_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(ResidualProjection::<f32>::new(3, 48, &mut rng).unwrap().num_params(), 288);
        assert_eq!(ResidualProjection::<f32>::new(48, 48, &mut rng).unwrap().num_params(), 2_448);
    }
}
