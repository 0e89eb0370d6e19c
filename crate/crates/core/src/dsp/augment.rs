//! Noise-swap augmentation: a synthetic trial keeps the low-frequency content
//! of trial `i` and takes its above-cutoff content from a donor `k`,
//! `S0(i) − Sn(i) + Sn(k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::butterworth::{design_butterworth_highpass, SosFilter};
use crate::data::{Trial, TrialSet};
use crate::error::{Error, Result};

/// Above-cutoff content of one trial, channel-major like the trial.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCandidate {
    pub trial_id: String,
    pub channels: usize,
    pub samples: Vec<f64>,
}

/// High-passes every channel of `trial` independently.
pub fn extract_noise(trial: &Trial, filter: &SosFilter, zero_phase: bool) -> Result<NoiseCandidate> {
    if (trial.sample_rate_hz - filter.sample_rate_hz).abs() > 1e-9 * filter.sample_rate_hz {
        return Err(Error::InvalidArgument(format!(
            "trial {} is sampled at {} Hz but the filter was designed for {} Hz",
            trial.id, trial.sample_rate_hz, filter.sample_rate_hz
        )));
    }
    let mut samples = Vec::with_capacity(trial.samples().len());
    for c in 0..trial.channels() {
        let x: Vec<f64> = trial.channel(c).iter().map(|&v| v as f64).collect();
        let y = if zero_phase {
            filter.apply_zero_phase(&x)?
        } else {
            filter.apply(&x)?
        };
        samples.extend(y);
    }
    Ok(NoiseCandidate {
        trial_id: trial.id.clone(),
        channels: trial.channels(),
        samples,
    })
}

/// `signal − own_noise + donor_noise`, elementwise. Where the two noise
/// values agree the signal sample is returned untouched.
pub fn noise_swap(signal: &[f64], own_noise: &[f64], donor_noise: &[f64]) -> Vec<f64> {
    signal
        .iter()
        .zip(own_noise)
        .zip(donor_noise)
        .map(|((&s, &own), &donor)| {
            let delta = donor - own;
            if delta == 0.0 {
                s
            } else {
                s + delta
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Output size as a multiple of the input; 1 leaves the set unchanged.
    pub factor: usize,
    pub seed: u64,
    pub same_class_donors: bool,
    /// Allow donors from other subjects.
    pub cross_subject_donors: bool,
    pub zero_phase: bool,
    pub cutoff_hz: f64,
    pub filter_order: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            factor: 3,
            seed: 0,
            same_class_donors: false,
            cross_subject_donors: false,
            zero_phase: false,
            cutoff_hz: 100.0,
            filter_order: 8,
        }
    }
}

/// Where a synthetic trial came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    /// Index and id of the trial supplying the signal and the label.
    pub signal_index: usize,
    pub signal_id: String,
    /// Index and id of the trial supplying the noise.
    pub donor_index: usize,
    pub donor_id: String,
}

fn eligible(set: &TrialSet, i: usize, cfg: &AugmentConfig) -> Vec<usize> {
    let me = &set.trials[i];
    set.trials
        .iter()
        .enumerate()
        .filter(|&(k, t)| {
            k != i
                && (cfg.cross_subject_donors || t.subject == me.subject)
                && (!cfg.same_class_donors || t.label == me.label)
        })
        .map(|(k, _)| k)
        .collect()
}

/// Draws a donor for every synthetic trial. Synthetic trial `j` uses its own
/// RNG stream `j`, so the pairing does not depend on scheduling.
pub fn draw_donors(set: &TrialSet, cfg: &AugmentConfig) -> Result<Vec<(usize, usize)>> {
    if cfg.factor == 0 {
        return Err(Error::InvalidArgument("augmentation factor must be at least 1".into()));
    }
    if cfg.factor == 1 {
        return Ok(Vec::new());
    }
    if set.len() < 2 {
        return Err(Error::InvalidData(format!(
            "augmentation needs at least 2 trials, got {}",
            set.len()
        )));
    }
    let pools: Vec<Vec<usize>> = (0..set.len()).map(|i| eligible(set, i, cfg)).collect();
    if let Some(i) = pools.iter().position(Vec::is_empty) {
        return Err(Error::InvalidData(format!("trial {} has no eligible noise donor", set.trials[i].id)));
    }
    let n = set.len();
    Ok((0..(cfg.factor - 1) * n)
        .map(|j| {
            let i = j % n;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(j as u64);
            (i, pools[i][rng.gen_range(0..pools[i].len())])
        })
        .collect())
}

/// Builds the synthetic trials for explicit `(signal, donor)` pairs.
pub fn swap_pairs(
    set: &TrialSet,
    pairs: &[(usize, usize)],
    filter: &SosFilter,
    zero_phase: bool,
) -> Result<(Vec<Trial>, Vec<Provenance>)> {
    let n = set.len();
    if let Some(&(i, k)) = pairs.iter().find(|&&(i, k)| i >= n || k >= n) {
        return Err(Error::InvalidArgument(format!("pair ({i}, {k}) outside a set of {n} trials")));
    }
    for &(i, k) in pairs {
        let (a, b) = (&set.trials[i], &set.trials[k]);
        if a.channels() != b.channels() || a.len() != b.len() {
            return Err(Error::shape(
                "noise swap",
                format!("trial {} and donor {} differ in shape", a.id, b.id),
            ));
        }
    }
    let noise: Vec<NoiseCandidate> = set
        .trials
        .par_iter()
        .map(|t| extract_noise(t, filter, zero_phase))
        .collect::<Result<_>>()?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(j, &(i, k))| {
            let src = &set.trials[i];
            let signal: Vec<f64> = src.samples().iter().map(|&v| v as f64).collect();
            let mixed = noise_swap(&signal, &noise[i].samples, &noise[k].samples);
            let id = format!("{}.aug{}", src.id, j / n + 1);
            let trial = src.with_samples(id.clone(), mixed.into_iter().map(|v| v as f32).collect())?;
            let prov = Provenance {
                id,
                signal_index: i,
                signal_id: src.id.clone(),
                donor_index: k,
                donor_id: set.trials[k].id.clone(),
            };
            Ok((trial, prov))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// Returns every original trial followed by `(factor − 1)·n` synthetic ones,
/// plus one provenance record per synthetic trial.
pub fn augment(set: &TrialSet, cfg: &AugmentConfig) -> Result<(TrialSet, Vec<Provenance>)> {
    let pairs = draw_donors(set, cfg)?;
    if pairs.is_empty() {
        return Ok((set.clone(), Vec::new()));
    }
    let rate = set.trials[0].sample_rate_hz;
    let filter = design_butterworth_highpass(cfg.filter_order, cfg.cutoff_hz, rate)?;
    let (synthetic, provenance) = swap_pairs(set, &pairs, &filter, cfg.zero_phase)?;
    let mut trials = set.trials.clone();
    trials.extend(synthetic);
    Ok((set.with_trials(trials), provenance))
}
