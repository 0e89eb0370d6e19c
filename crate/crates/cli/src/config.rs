//! Run configuration: a TOML file whose sections mirror the engine's
//! configuration types. Precedence, lowest first: built-in defaults, file
//! sections, the file's top-level `seed`, command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eeg_inception::data::SynthConfig;
use eeg_inception::dsp::AugmentConfig;
use eeg_inception::train::TrainConfig;
use eeg_inception::ModelConfig;
use serde::{Deserialize, Serialize};

pub const RESOLVED_CONFIG: &str = "config.resolved";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Trial manifest used for training, or for everything when `test` is unset.
    pub data: Option<PathBuf>,
    /// Separate held-out manifest.
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of each subject's trials used for training.
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratio: 0.75, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub positive_class: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { positive_class: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    pub depths: Vec<usize>,
    /// Train and test every depth; otherwise only sizes are reported.
    pub train: bool,
}

impl Default for AblateConfig {
    fn default() -> Self {
        AblateConfig {
            depths: vec![6, 12, 16, 24, 32, 64],
            train: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub samples: usize,
    /// Depths to time; empty means the `[model]` depth.
    pub depths: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            samples: 100,
            depths: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub order: usize,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            order: 8,
            cutoff_hz: 100.0,
            sample_rate_hz: 250.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand that produced a resolved config; informational.
    pub command: Option<String>,
    /// Overrides every component seed when set.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub paths: Paths,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Offline augmentation for the `augment` command; training uses
    /// `train.augment`.
    pub augment: AugmentConfig,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub eval: EvalConfig,
    pub ablate: AblateConfig,
    pub bench: BenchConfig,
    pub filter: FilterConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).with_context(|| format!("config file {}", path.display()))?;
        if let Some(seed) = cfg.seed {
            cfg.apply_seed(seed);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
        Self::from_toml(&text, path)
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.model.seed = seed;
        self.train.seed = seed;
        self.train.augment.seed = seed;
        self.augment.seed = seed;
        self.synth.seed = seed;
        self.split.seed = seed;
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing the resolved config")
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RESOLVED_CONFIG);
        fs::write(&path, self.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let p = Path::new("run.toml");
        assert!(RunConfig::from_toml("[model]\ndepht = 3\n", p).is_err());
        assert!(RunConfig::from_toml("epochs = 3\n", p).is_err());
        let cfg = RunConfig::from_toml("[train]\nepochs = 3\n", p).unwrap();
        assert_eq!(cfg.train.epochs, 3);
    }

    #[test]
    fn top_level_seed_reaches_every_component() {
        let cfg = RunConfig::from_toml("seed = 9\n[synth]\nseed = 2\n", Path::new("x")).unwrap();
        assert_eq!((cfg.model.seed, cfg.synth.seed, cfg.train.augment.seed, cfg.split.seed), (9, 9, 9, 9));
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_seed(4);
        cfg.paths.data = Some("trials.json".into());
        cfg.command = Some("train".into());
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text, Path::new("x")).unwrap(), cfg);
    }
}
