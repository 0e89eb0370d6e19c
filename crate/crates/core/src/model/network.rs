use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{module_name, residual_name, BlockParams, ModelConfig};
use super::inception::{InceptionCache, InceptionModule};
use super::residual::{ResidualCache, ResidualProjection};
use crate::error::{Error, Result};
use crate::nn::{join_name, softmax, GlobalAvgPool, Layer, Linear, Mode, Param, Parameterized};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Stacked inception modules with periodic residual projections, global
/// average pooling over time and a linear classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct EegInception<S> {
    config: ModelConfig,
    pub modules: Vec<InceptionModule<S>>,
    pub residuals: Vec<ResidualProjection<S>>,
    pub head: Linear<S>,
}

#[derive(Clone, Debug)]
pub struct ModelCache<S> {
    modules: Vec<InceptionCache<S>>,
    residuals: Vec<ResidualCache<S>>,
    pooled_from: Shape,
    features: Tensor<S>,
    activations: Vec<Shape>,
}

impl<S> ModelCache<S> {
    /// Output shape of every inception module and residual, in network order.
    pub fn activation_shapes(&self) -> &[Shape] {
        &self.activations
    }
}

impl<S: Scalar> EegInception<S> {
    /// Builds a freshly initialized network; all randomness comes from
    /// `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w = config.concat_width();
        let mut modules = Vec::with_capacity(config.n_inception);
        for i in 0..config.n_inception {
            let input = if i == 0 { config.in_channels } else { w };
            modules.push(InceptionModule::new(
                input,
                config.depth,
                &config.kernel_sizes,
                config.pool_kernel,
                &mut rng,
            )?);
        }
        let residuals = (0..config.n_residual())
            .map(|j| ResidualProjection::new(if j == 0 { config.in_channels } else { w }, w, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let head = Linear::new(w, config.n_classes, &mut rng)?;
        Ok(EegInception {
            config,
            modules,
            residuals,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn check_input(&self, input: &Tensor<S>) -> Result<()> {
        let s = input.shape();
        if s.channels != self.config.in_channels || s.time != self.config.time_len {
            return Err(Error::shape(
                "eeg-inception",
                format!(
                    "expected [B, {}, {}], got {s}",
                    self.config.in_channels, self.config.time_len
                ),
            ));
        }
        Ok(())
    }

    fn block_end(&self, i: usize) -> Option<usize> {
        ((i + 1) % self.config.residual_period == 0).then(|| (i + 1) / self.config.residual_period - 1)
    }

    /// Eval-mode logits without caches or state changes.
    pub fn predict(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        self.check_input(input)?;
        let mut x = input.clone();
        let mut tap = input.clone();
        for (i, module) in self.modules.iter().enumerate() {
            x = module.predict(&x)?;
            if let Some(j) = self.block_end(i) {
                x = self.residuals[j].predict(&tap, &x)?;
                tap = x.clone();
            }
        }
        let (pooled, _) = GlobalAvgPool.apply(&x)?;
        self.head.apply(&pooled)
    }

    /// Class probabilities, `[B, n_classes]`.
    pub fn predict_proba(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        Ok(softmax(&self.predict(input)?))
    }

    /// Per-block parameter totals of this instance, in network order.
    pub fn block_param_counts(&self) -> Vec<BlockParams> {
        let mut blocks = Vec::new();
        for (i, module) in self.modules.iter().enumerate() {
            blocks.push(BlockParams {
                name: module_name(i),
                params: module.num_params(),
            });
            if let Some(j) = self.block_end(i) {
                blocks.push(BlockParams {
                    name: residual_name(j),
                    params: self.residuals[j].num_params(),
                });
            }
        }
        blocks.push(BlockParams {
            name: "head".to_string(),
            params: self.head.num_params(),
        });
        blocks
    }
}

impl<S: Scalar> Parameterized<S> for EegInception<S> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>)) {
        for (i, m) in self.modules.iter().enumerate() {
            m.visit_params(&join_name(prefix, &module_name(i)), f);
        }
        for (j, r) in self.residuals.iter().enumerate() {
            r.visit_params(&join_name(prefix, &residual_name(j)), f);
        }
        self.head.visit_params(&join_name(prefix, "head"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>)) {
        for (i, m) in self.modules.iter_mut().enumerate() {
            m.visit_params_mut(&join_name(prefix, &module_name(i)), f);
        }
        for (j, r) in self.residuals.iter_mut().enumerate() {
            r.visit_params_mut(&join_name(prefix, &residual_name(j)), f);
        }
        self.head.visit_params_mut(&join_name(prefix, "head"), f);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[S])) {
        for (i, m) in self.modules.iter().enumerate() {
            m.visit_buffers(&join_name(prefix, &module_name(i)), f);
        }
        for (j, r) in self.residuals.iter().enumerate() {
            r.visit_buffers(&join_name(prefix, &residual_name(j)), f);
        }
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Vec<S>)) {
        for (i, m) in self.modules.iter_mut().enumerate() {
            m.visit_buffers_mut(&join_name(prefix, &module_name(i)), f);
        }
        for (j, r) in self.residuals.iter_mut().enumerate() {
            r.visit_buffers_mut(&join_name(prefix, &residual_name(j)), f);
        }
    }
}

impl<S: Scalar> Layer<S> for EegInception<S> {
    type Cache = ModelCache<S>;

    /// Logits `[B, n_classes]`. In train mode batch-norm running statistics
    /// are updated.
    fn forward(&mut self, input: &Tensor<S>, mode: Mode) -> Result<(Tensor<S>, ModelCache<S>)> {
        self.check_input(input)?;
        let mut module_caches = Vec::with_capacity(self.modules.len());
        let mut residual_caches = Vec::with_capacity(self.residuals.len());
        let mut activations = Vec::new();
        let mut x = input.clone();
        let mut tap = input.clone();
        for i in 0..self.modules.len() {
            let (y, cache) = self.modules[i].forward(&x, mode)?;
            module_caches.push(cache);
            activations.push(y.shape());
            x = y;
            if let Some(j) = self.block_end(i) {
                let (y, cache) = self.residuals[j].forward(&tap, &x, mode)?;
                residual_caches.push(cache);
                activations.push(y.shape());
                x = y;
                tap = x.clone();
            }
        }
        let (features, pooled_from) = GlobalAvgPool.apply(&x)?;
        let logits = self.head.apply(&features)?;
        Ok((
            logits,
            ModelCache {
                modules: module_caches,
                residuals: residual_caches,
                pooled_from,
                features,
                activations,
            },
        ))
    }

    fn backward(&mut self, cache: &ModelCache<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        let d_features = self.head.backprop(&cache.features, grad_output)?;
        let mut d = GlobalAvgPool.backprop(&cache.pooled_from, &d_features)?;
        let period = self.config.residual_period;
        let mut pending_tap: Option<Tensor<S>> = None;
        for i in (0..self.modules.len()).rev() {
            if let Some(j) = self.block_end(i) {
                let (d_tap, d_main) = self.residuals[j].backward(&cache.residuals[j], &d)?;
                pending_tap = Some(d_tap);
                d = d_main;
            }
            d = self.modules[i].backward(&cache.modules[i], &d)?;
            if i % period == 0 {
                if let Some(d_tap) = pending_tap.take() {
                    d.add_assign(&d_tap)?;
                }
            }
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::count_params;
    use crate::nn::grad_check;

    fn tiny() -> ModelConfig {
        ModelConfig {
            in_channels: 2,
            depth: 2,
            kernel_sizes: vec![3, 5],
            n_classes: 2,
            time_len: 16,
            n_inception: 6,
            residual_period: 3,
            pool_kernel: 3,
            seed: 11,
        }
    }

    fn signal(shape: Shape) -> Tensor<f64> {
        Tensor::from_fn(shape, |b, c, t| ((b * 7 + c * 3 + t) as f64 * 0.731).sin() * 1.3)
    }

    #[test]
    fn materialized_binary_model_matches_closed_form() {
        let cfg = ModelConfig::binary();
        let model = EegInception::<f32>::new(cfg.clone()).unwrap();
        assert_eq!(model.num_params(), count_params(&cfg));
        assert_eq!(model.num_params(), 204_002);
        assert_eq!(model.block_param_counts(), crate::model::block_param_counts(&cfg));
    }

    #[test]
    fn activation_shapes_through_the_network() {
        let cfg = ModelConfig {
            time_len: 40,
            ..ModelConfig::binary().with_depth(2)
        };
        let mut model = EegInception::<f32>::new(cfg).unwrap();
        let x = Tensor::zeros(Shape::new(3, 3, 40));
        let (logits, cache) = model.forward(&x, Mode::Eval).unwrap();
        assert_eq!(logits.shape(), Shape::new(3, 2, 1));
        assert_eq!(cache.activation_shapes().len(), 8);
        assert!(cache.activation_shapes().iter().all(|&s| s == Shape::new(3, 8, 40)));
    }

    #[test]
    fn zeroed_residuals_reduce_to_plain_stack() {
        let mut model = EegInception::<f64>::new(tiny()).unwrap();
        for r in &mut model.residuals {
            r.conv.weight.value.iter_mut().for_each(|w| *w = 0.0);
            r.conv.bias.value.iter_mut().for_each(|b| *b = 0.0);
        }
        let x = signal(Shape::new(2, 2, 16));
        let mut h = x.clone();
        for m in &model.modules {
            h = m.predict(&h).unwrap();
        }
        let (pooled, _) = GlobalAvgPool.apply(&h).unwrap();
        let plain = model.head.apply(&pooled).unwrap();
        assert_eq!(model.predict(&x).unwrap(), plain);
    }

    #[test]
    fn identical_samples_get_identical_logits() {
        let model = EegInception::<f32>::new(ModelConfig { time_len: 50, ..ModelConfig::four_class().with_depth(2) }).unwrap();
        let one = Tensor::from_fn(Shape::new(1, 22, 50), |_, c, t| ((c * 50 + t) as f32 * 0.13).sin());
        let mut data = one.data().to_vec();
        data.extend_from_slice(one.data());
        let two = Tensor::from_vec(Shape::new(2, 22, 50), data).unwrap();
        let logits = model.predict(&two).unwrap();
        assert_eq!(logits.shape(), Shape::new(2, 4, 1));
        assert_eq!(logits.sample(0), logits.sample(1));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn closed_form_count_matches_materialized(
            in_channels in 1usize..5,
            depth in 1usize..6,
            n_kernels in 1usize..4,
            n_classes in 2usize..5,
            period in 1usize..4,
            blocks in 1usize..3,
        ) {
            let cfg = ModelConfig {
                in_channels,
                depth,
                kernel_sizes: (0..n_kernels).map(|i| 2 * i + 3).collect(),
                n_classes,
                time_len: 8,
                n_inception: period * blocks,
                residual_period: period,
                pool_kernel: 3,
                seed: 0,
            };
            let model = EegInception::<f32>::new(cfg.clone()).unwrap();
            proptest::prop_assert_eq!(model.num_params(), count_params(&cfg));
            let (logits, cache) = model.clone().forward(&Tensor::zeros(Shape::new(2, in_channels, 8)), Mode::Train).unwrap();
            proptest::prop_assert_eq!(logits.shape(), Shape::new(2, n_classes, 1));
            let w = cfg.concat_width();
            proptest::prop_assert!(cache.activation_shapes().iter().all(|&s| s == Shape::new(2, w, 8)));
        }
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let model = EegInception::<f64>::new(tiny()).unwrap();
        let err = model.predict(&Tensor::zeros(Shape::new(1, 3, 16))).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
        assert!(model.predict(&Tensor::zeros(Shape::new(1, 2, 15))).is_err());
    }

    #[test]
    fn same_seed_builds_identical_models() {
        let a = EegInception::<f32>::new(tiny()).unwrap();
        let b = EegInception::<f32>::new(tiny()).unwrap();
        let c = EegInception::<f32>::new(tiny().with_seed(12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn predict_equals_eval_forward_bitwise() {
        let mut model = EegInception::<f32>::new(tiny()).unwrap();
        let x = signal(Shape::new(2, 2, 16)).cast::<f32>();
        let (a, _) = model.forward(&x, Mode::Eval).unwrap();
        assert_eq!(model.predict(&x).unwrap(), a);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = EegInception::<f64>::new(tiny()).unwrap();
        let p = model.predict_proba(&signal(Shape::new(3, 2, 16))).unwrap();
        for row in p.data().chunks(2) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn full_model_gradients_match_finite_differences() {
        let model = EegInception::<f64>::new(tiny()).unwrap();
        let x = signal(Shape::new(2, 2, 16));
        let labels = [0, 1];
        // The step is small enough that few perturbations cross a ReLU or
        // max-pool kink; zero-gradient biases are handled by the checker.
        for mode in [Mode::Train, Mode::Eval] {
            let (_, grad) = crate::model::loss_and_gradient(&model, &x, &labels, mode).unwrap();
            let err = crate::model::check_model_gradient(&model, &x, &labels, mode, &grad, 1e-5, 50, 21).unwrap();
            assert!(err <= 1e-3, "{mode:?}: {err}");
        }
    }

    #[test]
    fn projected_gradients_of_eval_network() {
        let model = EegInception::<f64>::new(tiny()).unwrap();
        let x = signal(Shape::new(2, 2, 16));
        let report = grad_check(&model, &x, Mode::Eval, 1e-5, 21).unwrap();
        assert!(report.max_rel_error <= 1e-3, "{report:?}");
    }
}
