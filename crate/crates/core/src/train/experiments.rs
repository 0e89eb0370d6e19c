//! Multi-run experiments: depth ablation, leave-one-subject-out, the
//! augmentation A/B comparison and inference timing.

use std::io::Write;
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use super::evaluate::{evaluate, score, MetricsReport};
use super::fit::{fit, TrainConfig};
use super::metrics::ConfusionMatrix;
use crate::data::{Split, TrialSet};
use crate::error::{Error, Result};
use crate::model::{count_params, encode_model, EegInception, ModelConfig};
use crate::nn::Parameterized;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub depth: usize,
    pub params: Option<usize>,
    pub closed_form_params: usize,
    pub weight_bytes: Option<usize>,
    pub train_seconds: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub error: Option<String>,
}

/// Sweeps the branch width. With `data` each depth is trained and
/// evaluated; without it only sizes are reported. A failing depth is
/// recorded in its row and the sweep continues.
pub fn ablate<S: Scalar>(
    depths: &[usize],
    base: &ModelConfig,
    data: Option<(&TrialSet, &TrialSet)>,
    cfg: &TrainConfig,
) -> Vec<AblationRow> {
    depths
        .iter()
        .map(|&depth| {
            let config = base.clone().with_depth(depth);
            let mut row = AblationRow {
                depth,
                params: None,
                closed_form_params: count_params(&config),
                weight_bytes: None,
                train_seconds: None,
                test_accuracy: None,
                error: None,
            };
            let run = |row: &mut AblationRow| -> Result<()> {
                let mut model = EegInception::<S>::new(config.clone())?;
                row.params = Some(model.num_params());
                if let Some((train_set, test_set)) = data {
                    let start = Instant::now();
                    fit(&mut model, train_set, cfg)?;
                    row.train_seconds = Some(start.elapsed().as_secs_f64());
                    row.test_accuracy = evaluate(&model, test_set, 1)?.report.accuracy;
                }
                row.weight_bytes = Some(encode_model(&model).len());
                Ok(())
            };
            if let Err(e) = run(&mut row) {
                warn!("depth {depth}: {e}");
                row.error = Some(e.to_string());
            }
            info!("depth {depth}: {:?} parameters", row.params);
            row
        })
        .collect()
}

pub fn write_ablation_csv<W: Write>(rows: &[AblationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let opt = |v: Option<String>| v.unwrap_or_default();
    w.write_record(["depth", "params", "closed_form_params", "weight_bytes", "train_seconds", "test_accuracy", "error"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.depth.to_string(),
            opt(r.params.map(|v| v.to_string())),
            r.closed_form_params.to_string(),
            opt(r.weight_bytes.map(|v| v.to_string())),
            opt(r.train_seconds.map(|v| format!("{v:.6}"))),
            opt(r.test_accuracy.map(|v| format!("{v:.6}"))),
            opt(r.error.clone()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format {
        path: "<csv>".into(),
        detail: e.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LosoFold {
    pub subject: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub report: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LosoReport {
    pub folds: Vec<LosoFold>,
    /// Metrics of all held-out predictions together; its confusion matrix is
    /// the elementwise sum of the folds'.
    pub pooled: MetricsReport,
}

/// Stable 64-bit FNV-1a, used to derive per-subject seeds.
fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn fold_seed(base: u64, subject: &str) -> u64 {
    base ^ fnv1a(subject)
}

/// For each subject, trains on every other subject's non-test trials and
/// evaluates on all of the held-out subject's trials.
pub fn loso_evaluate<S: Scalar>(
    set: &TrialSet,
    model_config: &ModelConfig,
    cfg: &TrainConfig,
    positive_class: usize,
) -> Result<LosoReport> {
    let subjects = set.subjects();
    if subjects.len() < 2 {
        return Err(Error::InvalidData(format!(
            "leave-one-subject-out needs at least 2 subjects, found {}",
            subjects.len()
        )));
    }
    let mut folds = Vec::new();
    let mut labels = Vec::new();
    let mut probabilities = Vec::new();
    for subject in &subjects {
        let held_out = set.subject(subject);
        let pool = set.filter(|t| &t.subject != subject && t.split != Split::Test);
        if held_out.is_empty() || pool.is_empty() {
            warn!("skipping subject {subject}: no trials to train or test on");
            continue;
        }
        let seed = fold_seed(cfg.seed, subject);
        let mut fold_cfg = cfg.clone();
        fold_cfg.seed = seed;
        fold_cfg.augment.seed = seed;
        let mut model = EegInception::<S>::new(model_config.clone().with_seed(seed))?;
        fit(&mut model, &pool, &fold_cfg)?;
        let eval = evaluate(&model, &held_out, positive_class)?;
        info!("held-out {subject}: accuracy {:?}", eval.report.accuracy);
        labels.extend_from_slice(&eval.labels);
        probabilities.extend_from_slice(&eval.probabilities);
        folds.push(LosoFold {
            subject: subject.clone(),
            seed,
            n_train: pool.len(),
            n_test: held_out.len(),
            report: eval.report,
        });
    }
    if folds.is_empty() {
        return Err(Error::InvalidData("no subject could be evaluated".into()));
    }
    let pooled = score(set.n_classes, &labels, &probabilities, positive_class)?.report;
    Ok(LosoReport { folds, pooled })
}

/// Elementwise sum of fold confusion matrices.
pub fn pooled_confusion(reports: &[MetricsReport]) -> Result<ConfusionMatrix> {
    let first = reports.first().ok_or_else(|| Error::InvalidArgument("no reports to pool".into()))?;
    let mut total = ConfusionMatrix::new(first.n_classes);
    for r in reports {
        total.merge(&ConfusionMatrix::from_rows(&r.confusion)?)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbRow {
    pub seed: u64,
    pub baseline_accuracy: f64,
    pub augmented_accuracy: f64,
}

/// Trains the same seeded model with and without augmentation and
/// evaluates both on `test`.
pub fn augmentation_ab<S: Scalar>(
    train_set: &TrialSet,
    test_set: &TrialSet,
    model_config: &ModelConfig,
    cfg: &TrainConfig,
    factor: usize,
    seeds: &[u64],
) -> Result<Vec<AbRow>> {
    seeds
        .iter()
        .map(|&seed| {
            let run = |f: usize| -> Result<f64> {
                let mut c = cfg.clone();
                c.seed = seed;
                c.augment.seed = seed;
                c.augment.factor = f;
                let mut model = EegInception::<S>::new(model_config.clone().with_seed(seed))?;
                fit(&mut model, train_set, &c)?;
                Ok(evaluate(&model, test_set, 1)?.report.accuracy.unwrap_or(0.0))
            };
            let row = AbRow {
                seed,
                baseline_accuracy: run(1)?,
                augmented_accuracy: run(factor)?,
            };
            info!("seed {seed}: baseline {:.4}, augmented {:.4}", row.baseline_accuracy, row.augmented_accuracy);
            Ok(row)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingReport {
    pub samples: usize,
    pub warmup: usize,
    pub median_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
}

pub const TIMING_WARMUP: usize = 3;

/// Median wall-clock time of single-sample eval-mode forward passes, after
/// `TIMING_WARMUP` discarded passes.
pub fn time_inference<S: Scalar>(model: &EegInception<S>, sample: &Tensor<S>, n_samples: usize) -> Result<TimingReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("timing needs at least one sample".into()));
    }
    if sample.shape().batch != 1 {
        return Err(Error::shape("time_inference", format!("expected a single sample, got {}", sample.shape())));
    }
    for _ in 0..TIMING_WARMUP {
        model.predict(sample)?;
    }
    let mut times = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let start = Instant::now();
        let out = model.predict(sample)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2.0
    };
    Ok(TimingReport {
        samples: n_samples,
        warmup: TIMING_WARMUP,
        median_seconds: median,
        min_seconds: times[0],
        max_seconds: times[times.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthConfig};
    use crate::tensor::Shape;

    fn small_model() -> ModelConfig {
        ModelConfig {
            time_len: 32,
            kernel_sizes: vec![3, 5],
            pool_kernel: 3,
            ..ModelConfig::binary().with_depth(2)
        }
    }

    #[test]
    fn ablation_without_data_reports_sizes() {
        let rows = ablate::<f32>(&[6, 12], &ModelConfig::binary(), None, &TrainConfig::default());
        assert_eq!(rows[0].params, Some(51_386));
        assert_eq!(rows[1].params, Some(204_002));
        assert!(rows.iter().all(|r| r.params == Some(r.closed_form_params)));
        assert!(rows[1].weight_bytes.unwrap() > 4 * 204_002);
        let mut buf = Vec::new();
        write_ablation_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn failing_depth_is_recorded() {
        let rows = ablate::<f32>(&[0, 2], &small_model(), None, &TrainConfig::default());
        assert!(rows[0].error.is_some());
        assert!(rows[1].error.is_none());
    }

    #[test]
    fn loso_pools_fold_confusions() {
        let set = synth_generate(&SynthConfig { n_per_class: 3, n_subjects: 3, time_len: 32, ..Default::default() }).unwrap();
        let cfg = TrainConfig { epochs: 1, batch_size: 8, ..Default::default() };
        let report = loso_evaluate::<f32>(&set, &small_model(), &cfg, 1).unwrap();
        assert_eq!(report.folds.len(), 3);
        let reports: Vec<MetricsReport> = report.folds.iter().map(|f| f.report.clone()).collect();
        let summed = pooled_confusion(&reports).unwrap();
        assert_eq!(summed.rows(), report.pooled.confusion);
        assert_eq!(report.pooled.n_samples, 18);
        let acc = summed.trace() as f64 / summed.total() as f64;
        assert_eq!(report.pooled.accuracy, Some(acc));
        assert!(loso_evaluate::<f32>(&set.subject("S1"), &small_model(), &cfg, 1).is_err());
    }

    #[test]
    fn timing_is_positive_and_finite() {
        let model = EegInception::<f32>::new(small_model()).unwrap();
        let t = time_inference(&model, &Tensor::zeros(Shape::new(1, 3, 32)), 5).unwrap();
        assert!(t.median_seconds > 0.0 && t.median_seconds.is_finite());
        assert!(t.min_seconds <= t.median_seconds && t.median_seconds <= t.max_seconds);
    }

    #[test]
    fn fold_seeds_differ_by_subject() {
        assert_ne!(fold_seed(1, "S1"), fold_seed(1, "S2"));
        assert_eq!(fold_seed(1, "S1"), fold_seed(1, "S1"));
    }
}
