use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Conv1d, Linear};

/// Architecture hyperparameters.
///
/// `depth` is the per-branch width `M`; every inception module emits
/// `(kernel_sizes.len() + 1) · M` channels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub depth: usize,
    pub kernel_sizes: Vec<usize>,
    pub n_classes: usize,
    pub time_len: usize,
    pub n_inception: usize,
    pub residual_period: usize,
    pub pool_kernel: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::binary()
    }
}

impl ModelConfig {
    /// Three-channel, two-class network with `M = 12`.
    pub fn binary() -> Self {
        ModelConfig {
            in_channels: 3,
            depth: 12,
            kernel_sizes: vec![25, 75, 125],
            n_classes: 2,
            time_len: 750,
            n_inception: 6,
            residual_period: 3,
            pool_kernel: 25,
            seed: 0,
        }
    }

    /// Twenty-two-channel, four-class network with `M = 48`.
    pub fn four_class() -> Self {
        ModelConfig {
            in_channels: 22,
            depth: 48,
            kernel_sizes: vec![25, 75, 125, 175, 225],
            n_classes: 4,
            ..Self::binary()
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Channel count after concatenating every branch.
    pub fn concat_width(&self) -> usize {
        (self.kernel_sizes.len() + 1) * self.depth
    }

    pub fn n_residual(&self) -> usize {
        self.n_inception / self.residual_period.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.in_channels == 0 {
            return fail("in_channels must be at least 1");
        }
        if self.depth == 0 {
            return fail("depth must be at least 1");
        }
        if self.kernel_sizes.is_empty() {
            return fail("kernel_sizes must not be empty");
        }
        if let Some(k) = self.kernel_sizes.iter().find(|&&k| k % 2 == 0) {
            return Err(Error::InvalidConfig(format!("kernel size {k} is not odd")));
        }
        if self.kernel_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return fail("kernel_sizes must be strictly ascending");
        }
        if self.n_classes < 2 {
            return fail("n_classes must be at least 2");
        }
        if self.time_len == 0 {
            return fail("time_len must be at least 1");
        }
        if self.n_inception == 0 || self.residual_period == 0 {
            return fail("n_inception and residual_period must be positive");
        }
        if self.n_inception % self.residual_period != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_inception ({}) must be divisible by residual_period ({})",
                self.n_inception, self.residual_period
            )));
        }
        if self.pool_kernel == 0 {
            return fail("pool_kernel must be at least 1");
        }
        Ok(())
    }
}

/// Parameter total of one block of the network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockParams {
    pub name: String,
    pub params: usize,
}

pub(crate) fn module_name(index: usize) -> String {
    if index == 0 {
        "initial".to_string()
    } else {
        format!("intermediate_{index}")
    }
}

pub(crate) fn residual_name(index: usize) -> String {
    format!("residual_{}", index + 1)
}

/// Parameters of one inception module fed by `input` channels.
pub fn inception_params(config: &ModelConfig, input: usize) -> usize {
    let m = config.depth;
    let bottleneck = Conv1d::<f32>::param_count(input, m, 1);
    let branches: usize = config
        .kernel_sizes
        .iter()
        .map(|&k| Conv1d::<f32>::param_count(m, m, k))
        .sum();
    let pool_conv = Conv1d::<f32>::param_count(input, m, 1);
    bottleneck + branches + pool_conv + 2 * config.concat_width()
}

/// Closed-form per-block parameter totals in network order.
pub fn block_param_counts(config: &ModelConfig) -> Vec<BlockParams> {
    let w = config.concat_width();
    let mut blocks = Vec::new();
    for i in 0..config.n_inception {
        let input = if i == 0 { config.in_channels } else { w };
        blocks.push(BlockParams {
            name: module_name(i),
            params: inception_params(config, input),
        });
        if (i + 1) % config.residual_period == 0 {
            let j = (i + 1) / config.residual_period - 1;
            let tap = if j == 0 { config.in_channels } else { w };
            blocks.push(BlockParams {
                name: residual_name(j),
                params: Conv1d::<f32>::param_count(tap, w, 1) + 2 * w,
            });
        }
    }
    blocks.push(BlockParams {
        name: "head".to_string(),
        params: Linear::<f32>::param_count(w, config.n_classes),
    });
    blocks
}

/// Total learnable parameters of the network described by `config`.
pub fn count_params(config: &ModelConfig) -> usize {
    block_param_counts(config).iter().map(|b| b.params).sum()
}
