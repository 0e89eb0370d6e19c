use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::TrialSet;
use crate::dsp::{augment, AugmentConfig};
use crate::error::{Error, Result};
use crate::model::EegInception;
use crate::nn::{softmax_cross_entropy, Adam, AdamConfig, Layer, Mode, Parameterized};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Applied to the training set before training; factor 1 disables it.
    pub augment: AugmentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            seed: 0,
            adam: AdamConfig::default(),
            augment: AugmentConfig {
                factor: 1,
                ..AugmentConfig::default()
            },
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.augment.factor == 0 {
            return Err(Error::InvalidConfig("augmentation factor must be at least 1".into()));
        }
        self.adam.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean training loss over the epoch.
    pub loss: f64,
    /// Training accuracy of the train-mode predictions made during the epoch.
    pub accuracy: f64,
}

pub type History = Vec<EpochRecord>;

fn argmax<S: Scalar>(row: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows<S: Scalar>(values: &[S], width: usize) -> Vec<usize> {
    values.chunks(width).map(argmax).collect()
}

/// Minibatch Adam on softmax cross-entropy.
///
/// Every epoch reshuffles the trials with the seeded RNG and visits all of
/// them, the last batch possibly smaller. A non-finite loss or gradient
/// aborts with the epoch and batch where it happened.
pub fn train<S: Scalar>(model: &mut EegInception<S>, trials: &TrialSet, cfg: &TrainConfig) -> Result<History> {
    cfg.validate()?;
    if trials.is_empty() {
        return Err(Error::InvalidData("training set is empty".into()));
    }
    let mc = model.config().clone();
    if trials.n_channels() != mc.in_channels || trials.n_classes != mc.n_classes {
        return Err(Error::shape(
            "train",
            format!(
                "data has {} channels / {} classes, model expects {} / {}",
                trials.n_channels(),
                trials.n_classes,
                mc.in_channels,
                mc.n_classes
            ),
        ));
    }
    let labels = trials.labels();
    let mut optimizer = Adam::new(cfg.adam, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..trials.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = trials.batch::<S>(idx, mc.time_len)?;
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            model.zero_grad();
            let (logits, cache) = model.forward(&x, Mode::Train)?;
            let (loss, d_logits) = softmax_cross_entropy(&logits, &y)?;
            let loss = loss.as_f64();
            let diverged = |loss: f64| Error::Diverged {
                epoch,
                batch: b + 1,
                loss,
            };
            if !loss.is_finite() {
                return Err(diverged(loss));
            }
            model.backward(&cache, &d_logits)?;
            optimizer.step(model).map_err(|e| match e {
                Error::NonFinite(_) => diverged(loss),
                other => other,
            })?;
            loss_sum += loss * idx.len() as f64;
            correct += argmax_rows(logits.data(), mc.n_classes)
                .iter()
                .zip(&y)
                .filter(|(p, t)| p == t)
                .count();
            debug!("epoch {epoch} batch {} loss {loss:.6}", b + 1);
        }
        let record = EpochRecord {
            epoch,
            loss: loss_sum / trials.len() as f64,
            accuracy: correct as f64 / trials.len() as f64,
        };
        info!("epoch {epoch}: loss {:.5} train acc {:.4}", record.loss, record.accuracy);
        history.push(record);
    }
    Ok(history)
}

/// Augments `train` according to `cfg.augment` (a no-op at factor 1), then
/// trains.
pub fn fit<S: Scalar>(model: &mut EegInception<S>, train_set: &TrialSet, cfg: &TrainConfig) -> Result<History> {
    cfg.validate()?;
    if cfg.augment.factor > 1 {
        let (augmented, _) = augment(train_set, &cfg.augment)?;
        info!("augmented {} → {} training trials", train_set.len(), augmented.len());
        train(model, &augmented, cfg)
    } else {
        train(model, train_set, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthConfig};
    use crate::model::ModelConfig;

    fn tiny_model(seed: u64) -> EegInception<f32> {
        EegInception::new(ModelConfig {
            in_channels: 3,
            depth: 2,
            kernel_sizes: vec![3, 7],
            n_classes: 2,
            time_len: 64,
            n_inception: 3,
            residual_period: 3,
            pool_kernel: 5,
            seed,
        })
        .unwrap()
    }

    fn data() -> TrialSet {
        synth_generate(&SynthConfig {
            n_per_class: 6,
            time_len: 64,
            rhythm_hz: 20.0,
            rhythm_amplitude: 2.0,
            noise_std: 0.5,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert!(train(&mut tiny_model(0), &data(), &cfg).is_err());
    }

    #[test]
    fn same_seed_same_weights_and_history() {
        let cfg = TrainConfig { epochs: 3, batch_size: 5, seed: 4, ..Default::default() };
        let set = data();
        let (mut a, mut b) = (tiny_model(1), tiny_model(1));
        let ha = train(&mut a, &set, &cfg).unwrap();
        let hb = train(&mut b, &set, &cfg).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
        assert_eq!(ha.len(), 3);
    }

    #[test]
    fn loss_decreases_on_easy_data() {
        let cfg = TrainConfig { epochs: 15, batch_size: 4, ..Default::default() };
        let mut m = tiny_model(2);
        let h = train(&mut m, &data(), &cfg).unwrap();
        assert!(h.last().unwrap().loss < h[0].loss, "{h:?}");
    }

    #[test]
    fn divergence_reports_location() {
        let mut m = tiny_model(3);
        let mut cfg = TrainConfig { epochs: 2, batch_size: 6, ..Default::default() };
        cfg.adam.learning_rate = 1e36;
        let err = train(&mut m, &data(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { epoch: 1, batch: 2, .. }), "{err}");
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_rows(&[1.0f32, 1.0, 0.5, 2.0], 2), vec![0, 1]);
    }
}
