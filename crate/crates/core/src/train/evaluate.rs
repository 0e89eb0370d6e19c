use serde::Serialize;

use super::fit::argmax_rows;
use super::metrics::{roc_auc, roc_curve, ConfusionMatrix, RocPoint};
use crate::data::TrialSet;
use crate::error::{Error, Result};
use crate::model::EegInception;
use crate::scalar::Scalar;

/// Headline metrics of one evaluation. Undefined quantities are `null`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n_samples: u64,
    pub n_classes: usize,
    /// Rows = actual, columns = predicted.
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: Option<f64>,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub kappa: Option<f64>,
    pub macro_f1: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_precision: Option<f64>,
    pub positive_class: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Binary tasks only: area under the ROC of the positive-class probability.
    pub auc: Option<f64>,
}

impl MetricsReport {
    pub fn from_confusion(m: &ConfusionMatrix, positive_class: usize, auc: Option<f64>) -> Self {
        let n = m.n_classes();
        MetricsReport {
            n_samples: m.total(),
            n_classes: n,
            confusion: m.rows(),
            accuracy: m.accuracy(),
            per_class_accuracy: (0..n).map(|c| m.class_accuracy(c)).collect(),
            kappa: m.kappa(),
            macro_f1: m.macro_f1(),
            macro_recall: m.macro_recall(),
            macro_precision: m.macro_precision(),
            positive_class,
            precision: (positive_class < n).then(|| m.precision(positive_class)).flatten(),
            recall: (positive_class < n).then(|| m.recall(positive_class)).flatten(),
            f1: (positive_class < n).then(|| m.f1(positive_class)).flatten(),
            auc,
        }
    }
}

/// Everything an evaluation produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    pub labels: Vec<usize>,
    pub predictions: Vec<usize>,
    /// Row-major `[n_samples, n_classes]` softmax probabilities.
    pub probabilities: Vec<f64>,
    pub roc: Option<Vec<RocPoint>>,
}

const EVAL_BATCH: usize = 32;

/// Eval-mode class probabilities for every trial, row-major.
pub fn predict_probabilities<S: Scalar>(model: &EegInception<S>, set: &TrialSet) -> Result<Vec<f64>> {
    let t = model.config().time_len;
    let all: Vec<usize> = (0..set.len()).collect();
    let mut out = Vec::with_capacity(set.len() * model.config().n_classes);
    for idx in all.chunks(EVAL_BATCH) {
        let x = set.batch::<S>(idx, t)?;
        out.extend(model.predict_proba(&x)?.data().iter().map(|v| v.as_f64()));
    }
    Ok(out)
}

/// Assembles metrics from labels and probabilities.
pub fn score(n_classes: usize, labels: &[usize], probabilities: &[f64], positive_class: usize) -> Result<Evaluation> {
    if labels.is_empty() {
        return Err(Error::InvalidData("evaluation set is empty".into()));
    }
    let predictions = argmax_rows(probabilities, n_classes);
    let confusion = ConfusionMatrix::from_predictions(n_classes, labels, &predictions)?;
    let (auc, roc) = if n_classes == 2 && positive_class < 2 {
        let scores: Vec<f64> = probabilities.chunks(2).map(|p| p[positive_class]).collect();
        let positive: Vec<bool> = labels.iter().map(|&l| l == positive_class).collect();
        (roc_auc(&scores, &positive), roc_curve(&scores, &positive))
    } else {
        (None, None)
    };
    Ok(Evaluation {
        report: MetricsReport::from_confusion(&confusion, positive_class, auc),
        confusion,
        labels: labels.to_vec(),
        predictions,
        probabilities: probabilities.to_vec(),
        roc,
    })
}

/// Eval-mode predictions on `set`, scored against its labels.
pub fn evaluate<S: Scalar>(model: &EegInception<S>, set: &TrialSet, positive_class: usize) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::InvalidData("evaluation set is empty".into()));
    }
    let probabilities = predict_probabilities(model, set)?;
    score(set.n_classes, &set.labels(), &probabilities, positive_class)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoring_from_probabilities() {
        let probs = [0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7];
        let e = score(2, &[0, 1, 1, 0], &probs, 1).unwrap();
        assert_eq!(e.predictions, vec![0, 1, 0, 1]);
        assert_eq!(e.report.confusion, vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(e.report.accuracy, Some(0.5));
        // positive scores 0.1, 0.8, 0.4, 0.7 for labels 0, 1, 1, 0
        assert_eq!(e.report.auc, Some(0.75));
    }

    #[test]
    fn missing_class_reports_undefined() {
        let probs = [0.2, 0.7, 0.1, 0.8, 0.1, 0.1];
        let e = score(3, &[1, 0], &probs, 1).unwrap();
        assert_eq!(e.report.per_class_accuracy[2], None);
        assert_eq!(e.report.auc, None);
        let json = serde_json::to_string(&e.report).unwrap();
        assert!(json.contains("null"));
    }
}
