use std::collections::BTreeMap;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::trial::{Split, Trial, TrialSet};
use crate::error::{Error, Result};

/// Cuts a trial into model-length windows: the trial itself when it is
/// exactly `time_len` long, otherwise its first and last `time_len` samples.
pub fn window_split(trial: &Trial, time_len: usize) -> Result<Vec<Trial>> {
    let len = trial.len();
    if time_len == 0 || len < time_len {
        return Err(Error::InvalidData(format!(
            "trial {} has {len} samples, shorter than the window of {time_len}",
            trial.id
        )));
    }
    if len == time_len {
        return Ok(vec![trial.clone()]);
    }
    let cut = |start: usize, suffix: &str| {
        let mut samples = Vec::with_capacity(trial.channels() * time_len);
        for c in 0..trial.channels() {
            samples.extend_from_slice(&trial.channel(c)[start..start + time_len]);
        }
        trial.with_samples(format!("{}.{suffix}", trial.id), samples)
    };
    Ok(vec![cut(0, "w0")?, cut(len - time_len, "w1")?])
}

/// `window_split` over every trial of a set.
pub fn window_split_set(set: &TrialSet, time_len: usize) -> Result<TrialSet> {
    let mut out = Vec::with_capacity(set.len() * 2);
    for t in &set.trials {
        out.extend(window_split(t, time_len)?);
    }
    Ok(set.with_trials(out))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub subject: String,
    pub total: usize,
    pub rejected: usize,
    pub accepted: usize,
}

impl AcceptanceReport {
    /// Accepted fraction in percent; `None` for a subject without trials.
    pub fn rate_percent(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.accepted as f64 / self.total as f64)
    }
}

/// Drops trials flagged as rejected and reports per-subject acceptance.
pub fn filter_rejected(set: &TrialSet) -> (TrialSet, Vec<AcceptanceReport>) {
    let mut reports: BTreeMap<&str, AcceptanceReport> = BTreeMap::new();
    for t in &set.trials {
        let r = reports.entry(&t.subject).or_insert_with(|| AcceptanceReport {
            subject: t.subject.clone(),
            total: 0,
            rejected: 0,
            accepted: 0,
        });
        r.total += 1;
        if t.rejected {
            r.rejected += 1;
        } else {
            r.accepted += 1;
        }
    }
    let kept = set.filter(|t| !t.rejected);
    if kept.is_empty() && !set.is_empty() {
        warn!("all {} trials are flagged as rejected", set.len());
    }
    (kept, reports.into_values().collect())
}

fn with_split(t: &Trial, split: Split) -> Trial {
    let mut t = t.clone();
    t.split = split;
    t
}

/// Per-subject, class-stratified train/test partition.
///
/// When every trial already carries a split tag the tags are honored as-is.
/// Otherwise each subject's trials are shuffled per class with a seeded RNG
/// and the subject's train count `round(ratio·n)` is distributed across
/// classes by largest remainder, so every class is within one trial of the
/// ratio.
pub fn train_test_split(set: &TrialSet, ratio: f64, seed: u64) -> Result<(TrialSet, TrialSet)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} outside (0, 1)")));
    }
    let tagged = set.trials.iter().filter(|t| t.split != Split::Unassigned).count();
    if tagged == set.len() && !set.is_empty() {
        return Ok((
            set.filter(|t| t.split == Split::Train),
            set.filter(|t| t.split == Split::Test),
        ));
    }
    if tagged > 0 {
        return Err(Error::InvalidData(format!(
            "{tagged} of {} trials carry split tags; tag all or none",
            set.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for subject in set.subjects() {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); set.n_classes];
        for (i, t) in set.trials.iter().enumerate() {
            if t.subject == subject {
                by_class[t.label].push(i);
            }
        }
        let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
        if let Some(c) = sizes.iter().position(|&n| n == 1) {
            return Err(Error::InvalidData(format!(
                "subject {subject} class {c} has a single trial; stratified split needs at least 2"
            )));
        }
        let n_train = stratified_counts(&sizes, ratio);
        for (members, k) in by_class.iter_mut().zip(n_train) {
            members.shuffle(&mut rng);
            let (tr, te) = members.split_at(k);
            let mut tr = tr.to_vec();
            let mut te = te.to_vec();
            tr.sort_unstable();
            te.sort_unstable();
            train.extend(tr.into_iter().map(|i| with_split(&set.trials[i], Split::Train)));
            test.extend(te.into_iter().map(|i| with_split(&set.trials[i], Split::Test)));
        }
    }
    Ok((set.with_trials(train), set.with_trials(test)))
}

/// Train counts per class: floors of `ratio·n_c`, topped up by largest
/// remainder (ties to the lower class) until the total is `round(ratio·Σn)`,
/// and clamped so that every non-empty class keeps a trial on each side.
pub fn stratified_counts(sizes: &[usize], ratio: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (ratio * total as f64).round() as usize;
    let mut counts: Vec<usize> = sizes.iter().map(|&n| (ratio * n as f64).floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    let frac = |c: usize| ratio * sizes[c] as f64 - counts[c] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let mut assigned: usize = counts.iter().sum();
    for &c in &order {
        if assigned >= target {
            break;
        }
        if counts[c] < sizes[c] {
            counts[c] += 1;
            assigned += 1;
        }
    }
    for (k, &n) in counts.iter_mut().zip(sizes) {
        if n >= 2 {
            *k = (*k).clamp(1, n - 1);
        }
    }
    counts
}
