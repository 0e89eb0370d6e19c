use rand::Rng;

use crate::error::Result;
use crate::nn::{
    concat_channels, join_name, relu, relu_backward, split_channels, BatchNorm1d, BatchNormCache, Conv1d, ConvCache,
    Layer, MaxPool1d, MaxPoolCache, Mode, Param, Parameterized,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One inception module.
///
/// A 1×1 bottleneck maps the input to `M` channels and feeds every temporal
/// convolution; a parallel path max-pools the raw input and maps it to `M`
/// channels with another 1×1 convolution. The branches are concatenated in
/// ascending kernel order with the pooling path last, then batch-normalized
/// and rectified.
#[derive(Clone, Debug, PartialEq)]
pub struct InceptionModule<S> {
    pub bottleneck: Conv1d<S>,
    pub branches: Vec<Conv1d<S>>,
    pub pool: MaxPool1d,
    pub pool_conv: Conv1d<S>,
    pub bn: BatchNorm1d<S>,
}

#[derive(Clone, Debug)]
pub struct InceptionCache<S> {
    bottleneck: ConvCache<S>,
    branches: Vec<ConvCache<S>>,
    pool: MaxPoolCache,
    pool_conv: ConvCache<S>,
    bn: BatchNormCache<S>,
    normalized: Tensor<S>,
}

struct BranchOutputs<S> {
    concat: Tensor<S>,
    bottleneck: ConvCache<S>,
    branches: Vec<ConvCache<S>>,
    pool: MaxPoolCache,
    pool_conv: ConvCache<S>,
}

impl<S: Scalar> InceptionModule<S> {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        depth: usize,
        kernel_sizes: &[usize],
        pool_kernel: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let bottleneck = Conv1d::new(in_channels, depth, 1, rng)?;
        let branches = kernel_sizes
            .iter()
            .map(|&k| Conv1d::new(depth, depth, k, rng))
            .collect::<Result<Vec<_>>>()?;
        let pool = MaxPool1d::new(pool_kernel)?;
        let pool_conv = Conv1d::new(in_channels, depth, 1, rng)?;
        let bn = BatchNorm1d::new((kernel_sizes.len() + 1) * depth);
        Ok(InceptionModule {
            bottleneck,
            branches,
            pool,
            pool_conv,
            bn,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.bottleneck.in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.bn.channels()
    }

    fn run_branches(&self, input: &Tensor<S>) -> Result<BranchOutputs<S>> {
        let (squeezed, bottleneck) = self.bottleneck.apply(input)?;
        let mut outputs = Vec::with_capacity(self.branches.len() + 1);
        let mut branch_caches = Vec::with_capacity(self.branches.len());
        for conv in &self.branches {
            let (y, cache) = conv.apply(&squeezed)?;
            outputs.push(y);
            branch_caches.push(cache);
        }
        let (pooled, pool) = self.pool.apply(input)?;
        let (pool_out, pool_conv) = self.pool_conv.apply(&pooled)?;
        outputs.push(pool_out);
        let refs: Vec<&Tensor<S>> = outputs.iter().collect();
        Ok(BranchOutputs {
            concat: concat_channels(&refs)?,
            bottleneck,
            branches: branch_caches,
            pool,
            pool_conv,
        })
    }

    /// Eval-mode output without caches or state changes.
    pub fn predict(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        let branches = self.run_branches(input)?;
        let (normalized, _) = self.bn.apply_eval(&branches.concat)?;
        Ok(relu(&normalized))
    }
}

impl<S: Scalar> Parameterized<S> for InceptionModule<S> {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param<S>)) {
        self.bottleneck.visit_params(&join_name(prefix, "bottleneck"), f);
        for conv in &self.branches {
            conv.visit_params(&join_name(prefix, &format!("branch_k{}", conv.kernel_size())), f);
        }
        self.pool_conv.visit_params(&join_name(prefix, "pool_conv"), f);
        self.bn.visit_params(&join_name(prefix, "bn"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<S>)) {
        self.bottleneck.visit_params_mut(&join_name(prefix, "bottleneck"), f);
        for conv in &mut self.branches {
            let name = join_name(prefix, &format!("branch_k{}", conv.kernel_size()));
            conv.visit_params_mut(&name, f);
        }
        self.pool_conv.visit_params_mut(&join_name(prefix, "pool_conv"), f);
        self.bn.visit_params_mut(&join_name(prefix, "bn"), f);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[S])) {
        self.bn.visit_buffers(&join_name(prefix, "bn"), f);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Vec<S>)) {
        self.bn.visit_buffers_mut(&join_name(prefix, "bn"), f);
    }
}

impl<S: Scalar> Layer<S> for InceptionModule<S> {
    type Cache = InceptionCache<S>;

    fn forward(&mut self, input: &Tensor<S>, mode: Mode) -> Result<(Tensor<S>, InceptionCache<S>)> {
        let branches = self.run_branches(input)?;
        let (normalized, bn) = self.bn.forward(&branches.concat, mode)?;
        let out = relu(&normalized);
        Ok((
            out,
            InceptionCache {
                bottleneck: branches.bottleneck,
                branches: branches.branches,
                pool: branches.pool,
                pool_conv: branches.pool_conv,
                bn,
                normalized,
            },
        ))
    }

    fn backward(&mut self, cache: &InceptionCache<S>, grad_output: &Tensor<S>) -> Result<Tensor<S>> {
        let d_normalized = relu_backward(&cache.normalized, grad_output)?;
        let d_concat = self.bn.backprop(&cache.bn, &d_normalized)?;
        let m = self.bottleneck.out_channels();
        let parts = split_channels(&d_concat, &vec![m; self.branches.len() + 1])?;

        let mut d_squeezed: Option<Tensor<S>> = None;
        for ((conv, conv_cache), d_part) in self.branches.iter_mut().zip(&cache.branches).zip(&parts) {
            let d = conv.backprop(conv_cache, d_part)?;
            match d_squeezed.as_mut() {
                Some(acc) => acc.add_assign(&d)?,
                None => d_squeezed = Some(d),
            }
        }
        let d_squeezed = d_squeezed.expect("at least one temporal branch");
        let mut d_input = self.bottleneck.backprop(&cache.bottleneck, &d_squeezed)?;

        let d_pooled = self.pool_conv.backprop(&cache.pool_conv, &parts[parts.len() - 1])?;
        d_input.add_assign(&self.pool.backprop(&cache.pool, &d_pooled)?)?;
        Ok(d_input)
    }
}
