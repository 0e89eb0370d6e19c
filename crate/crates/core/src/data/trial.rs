use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Which partition a trial belongs to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    #[default]
    Unassigned,
}

/// One labeled multichannel recording, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub id: String,
    pub subject: String,
    pub label: usize,
    pub split: Split,
    pub rejected: bool,
    pub sample_rate_hz: f64,
    channels: usize,
    samples: Vec<f32>,
}

impl Trial {
    pub fn new(
        id: impl Into<String>,
        subject: impl Into<String>,
        label: usize,
        sample_rate_hz: f64,
        channels: usize,
        samples: Vec<f32>,
    ) -> Result<Self> {
        let id = id.into();
        if channels == 0 || samples.is_empty() || samples.len() % channels != 0 {
            return Err(Error::InvalidData(format!(
                "trial {id}: {} samples do not fill {channels} channels",
                samples.len()
            )));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidData(format!("trial {id}: sample rate {sample_rate_hz}")));
        }
        Ok(Trial {
            id,
            subject: subject.into(),
            label,
            split: Split::Unassigned,
            rejected: false,
            sample_rate_hz,
            channels,
            samples,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.len();
        &self.samples[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// A copy of this trial's metadata with different samples.
    pub fn with_samples(&self, id: impl Into<String>, samples: Vec<f32>) -> Result<Self> {
        let mut t = Trial::new(id, self.subject.clone(), self.label, self.sample_rate_hz, self.channels, samples)?;
        t.split = self.split;
        t.rejected = self.rejected;
        Ok(t)
    }
}

/// A collection of trials sharing channel layout and label space.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSet {
    pub channel_names: Vec<String>,
    pub n_classes: usize,
    pub trials: Vec<Trial>,
}

impl TrialSet {
    pub fn new(channel_names: Vec<String>, n_classes: usize, trials: Vec<Trial>) -> Result<Self> {
        let set = TrialSet {
            channel_names,
            n_classes,
            trials,
        };
        set.validate()?;
        Ok(set)
    }

    /// Same layout, different trials.
    pub fn with_trials(&self, trials: Vec<Trial>) -> TrialSet {
        TrialSet {
            channel_names: self.channel_names.clone(),
            n_classes: self.n_classes,
            trials,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidData(format!("n_classes = {}", self.n_classes)));
        }
        for t in &self.trials {
            if t.channels() != self.channel_names.len() {
                return Err(Error::InvalidData(format!(
                    "trial {} has {} channels, set declares {}",
                    t.id,
                    t.channels(),
                    self.channel_names.len()
                )));
            }
            if t.label >= self.n_classes {
                return Err(Error::InvalidData(format!(
                    "trial {} label {} outside [0, {})",
                    t.id, t.label, self.n_classes
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for t in &self.trials {
            counts[t.label] += 1;
        }
        counts
    }

    /// Subject ids in sorted order.
    pub fn subjects(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.trials.iter().map(|t| t.subject.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Trial) -> bool) -> TrialSet {
        self.with_trials(self.trials.iter().filter(|t| keep(t)).cloned().collect())
    }

    pub fn subject(&self, subject: &str) -> TrialSet {
        self.filter(|t| t.subject == subject)
    }

    /// Shortest trial length, or 0 for an empty set.
    pub fn min_len(&self) -> usize {
        self.trials.iter().map(Trial::len).min().unwrap_or(0)
    }

    /// Batch of the first `time_len` samples of the selected trials,
    /// `[indices.len(), C, time_len]`.
    pub fn batch<S: Scalar>(&self, indices: &[usize], time_len: usize) -> Result<Tensor<S>> {
        let c = self.n_channels();
        let mut data = Vec::with_capacity(indices.len() * c * time_len);
        for &i in indices {
            let t = &self.trials[i];
            if t.len() < time_len {
                return Err(Error::shape(
                    "batch",
                    format!("trial {} has {} samples, model needs {time_len}", t.id, t.len()),
                ));
            }
            for ch in 0..c {
                data.extend(t.channel(ch)[..time_len].iter().map(|&v| S::from_f32_sample(v)));
            }
        }
        Tensor::from_vec(Shape::new(indices.len(), c, time_len), data)
    }
}
