//! Confusion-matrix statistics, ROC analysis and cross-subject summaries.
//! Quantities that are undefined for the given data are `None`, never zero.

use serde::Serialize;

use crate::error::{Error, Result};

/// Square count matrix, rows = actual class, columns = predicted class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("confusion matrix must be square and non-empty".into()));
        }
        Ok(ConfusionMatrix {
            n_classes: n,
            counts: rows.concat(),
        })
    }

    pub fn from_predictions(n_classes: usize, actual: &[usize], predicted: &[usize]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels vs {} predictions",
                actual.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(n_classes);
        for (&a, &p) in actual.iter().zip(predicted) {
            if a >= n_classes || p >= n_classes {
                return Err(Error::InvalidArgument(format!("class ({a}, {p}) outside [0, {n_classes})")));
            }
            m.counts[a * n_classes + p] += 1;
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n_classes + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n_classes).map(<[u64]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n_classes).map(|a| self.get(a, c)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    /// Elementwise sum.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes != self.n_classes {
            return Err(Error::InvalidArgument("cannot merge confusion matrices of different sizes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.trace(), self.total())
    }

    /// Fraction of class `c` predicted correctly (its recall).
    pub fn class_accuracy(&self, c: usize) -> Option<f64> {
        self.recall(c)
    }

    pub fn recall(&self, c: usize) -> Option<f64> {
        ratio(self.get(c, c), self.row_sum(c))
    }

    pub fn precision(&self, c: usize) -> Option<f64> {
        ratio(self.get(c, c), self.col_sum(c))
    }

    pub fn f1(&self, c: usize) -> Option<f64> {
        let (p, r) = (self.precision(c)?, self.recall(c)?);
        (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
    }

    /// Cohen's kappa; `None` when chance agreement is 1.
    pub fn kappa(&self) -> Option<f64> {
        let n = self.total() as f64;
        if n == 0.0 {
            return None;
        }
        let p_o = self.trace() as f64 / n;
        let p_e: f64 = (0..self.n_classes)
            .map(|c| (self.row_sum(c) as f64 / n) * (self.col_sum(c) as f64 / n))
            .sum();
        (p_e < 1.0).then(|| (p_o - p_e) / (1.0 - p_e))
    }

    fn macro_of(&self, f: impl Fn(usize) -> Option<f64>) -> Option<f64> {
        let defined: Vec<f64> = (0..self.n_classes).filter_map(f).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    /// Unweighted mean over the classes where the quantity is defined.
    pub fn macro_f1(&self) -> Option<f64> {
        self.macro_of(|c| self.f1(c))
    }

    pub fn macro_recall(&self) -> Option<f64> {
        self.macro_of(|c| self.recall(c))
    }

    pub fn macro_precision(&self) -> Option<f64> {
        self.macro_of(|c| self.precision(c))
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One ROC operating point: predicting positive when `score ≥ threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

fn class_totals(positive: &[bool]) -> (usize, usize) {
    let p = positive.iter().filter(|&&b| b).count();
    (p, positive.len() - p)
}

/// ROC curve from a score-descending sweep; tied scores form one step.
/// Starts at (0, 0) with an infinite threshold.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Option<Vec<RocPoint>> {
    let (n_pos, n_neg) = class_totals(positive);
    if scores.len() != positive.len() || n_pos == 0 || n_neg == 0 || scores.iter().any(|s| s.is_nan()) {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: s,
        });
    }
    Some(points)
}

/// Trapezoidal area under the ROC curve; ties count one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let curve = roc_curve(scores, positive)?;
    Some(
        curve
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum(),
    )
}

/// Mean and sample (n − 1) standard deviation; the std is `None` for fewer
/// than two values.
pub fn cross_subject_stats(values: &[f64]) -> Option<(f64, Option<f64>)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() >= 2).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    Some((mean, std))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_degenerate_matrices() {
        let perfect = ConfusionMatrix::from_rows(&[vec![5, 0], vec![0, 7]]).unwrap();
        assert_eq!(perfect.accuracy(), Some(1.0));
        assert_eq!(perfect.kappa(), Some(1.0));
        assert_eq!(perfect.macro_f1(), Some(1.0));

        let one_sided = ConfusionMatrix::from_rows(&[vec![10, 0], vec![10, 0]]).unwrap();
        assert_eq!(one_sided.accuracy(), Some(0.5));
        assert_eq!(one_sided.kappa(), Some(0.0));
        assert_eq!(one_sided.precision(1), None);
        assert_eq!(one_sided.f1(1), None);

        let single = ConfusionMatrix::from_rows(&[vec![4, 0], vec![0, 0]]).unwrap();
        assert_eq!(single.kappa(), None);
        assert_eq!(single.recall(1), None);
    }

    #[test]
    fn absent_class_is_undefined_not_zero() {
        let m = ConfusionMatrix::from_predictions(3, &[0, 0, 1], &[0, 1, 1]).unwrap();
        assert_eq!(m.recall(2), None);
        assert_eq!(m.macro_recall(), Some((0.5 + 1.0) / 2.0));
    }

    #[test]
    fn roc_examples() {
        let auc = roc_auc(&[0.9, 0.8, 0.4, 0.3], &[true, false, true, false]).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
        assert_eq!(roc_auc(&[0.2; 6], &[true, false, true, false, false, true]), Some(0.5));
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1], &[true, true, false]), Some(1.0));
        assert_eq!(roc_auc(&[0.9, 0.8], &[true, true]), None);
        let curve = roc_curve(&[0.9, 0.8, 0.4, 0.3], &[true, false, true, false]).unwrap();
        assert_eq!(curve.last().map(|p| (p.fpr, p.tpr)), Some((1.0, 1.0)));
    }

    #[test]
    fn stats_edge_cases() {
        assert_eq!(cross_subject_stats(&[3.0, 3.0, 3.0]), Some((3.0, Some(0.0))));
        assert_eq!(cross_subject_stats(&[3.0]), Some((3.0, None)));
        assert_eq!(cross_subject_stats(&[]), None);
    }

    #[test]
    fn reference_confusion_matrices() {
        let binary = ConfusionMatrix::from_rows(&[vec![998, 406], vec![85, 687]]).unwrap();
        assert!((binary.accuracy().unwrap() - 0.7744).abs() <= 1e-4);
        assert!((binary.kappa().unwrap() - 0.55).abs() <= 0.005);
        assert!((binary.f1(1).unwrap() - 0.737).abs() <= 1e-3);
        assert!((binary.precision(1).unwrap() - 687.0 / 1093.0).abs() < 1e-15);
        assert!((binary.recall(1).unwrap() - 687.0 / 772.0).abs() < 1e-15);

        let four = ConfusionMatrix::from_rows(&[
            vec![253, 32, 3, 5],
            vec![60, 214, 6, 12],
            vec![79, 57, 159, 16],
            vec![74, 51, 11, 152],
        ])
        .unwrap();
        assert!((four.kappa().unwrap() - 0.544).abs() <= 1e-3);
        assert!((four.macro_f1().unwrap() - 0.655).abs() <= 1e-3);
        // the printed 65.88% is the mean of the per-class accuracies
        assert!((four.macro_recall().unwrap() - 0.6588).abs() <= 1e-4);
        assert!((four.accuracy().unwrap() - 778.0 / 1184.0).abs() < 1e-15);
    }

    #[test]
    fn reference_cross_subject_columns() {
        let binary = [87.20, 79.79, 84.19, 96.32, 94.06, 89.27, 82.98, 90.63, 92.80];
        let (mean, std) = cross_subject_stats(&binary).unwrap();
        assert!((mean - 88.58).abs() <= 0.01 && (std.unwrap() - 5.50).abs() <= 0.01);
        let four = [89.61, 80.01, 96.17, 81.26, 83.76, 81.20, 94.75, 98.28, 90.50];
        let (mean, std) = cross_subject_stats(&four).unwrap();
        assert!((mean - 88.39).abs() <= 0.01 && (std.unwrap() - 7.06).abs() <= 0.01);
    }

    fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if positive[i] && !positive[j] {
                    pairs += 1.0;
                    wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
                }
            }
        }
        wins / pairs
    }

    fn brute_kappa(m: &ConfusionMatrix) -> f64 {
        let rows = m.rows();
        let n: f64 = rows.iter().flatten().map(|&v| v as f64).sum();
        let k = rows.len();
        let agree: f64 = (0..k).map(|i| rows[i][i] as f64).sum::<f64>() / n;
        let mut chance = 0.0;
        for c in 0..k {
            let r: f64 = rows[c].iter().map(|&v| v as f64).sum();
            let col: f64 = rows.iter().map(|row| row[c] as f64).sum();
            chance += r * col / (n * n);
        }
        (agree - chance) / (1.0 - chance)
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_count(
            raw in proptest::collection::vec((0u8..20, proptest::bool::ANY), 200),
        ) {
            let scores: Vec<f64> = raw.iter().map(|&(s, _)| s as f64 / 19.0).collect();
            let positive: Vec<bool> = raw.iter().map(|&(_, p)| p).collect();
            prop_assume!(positive.iter().any(|&p| p) && positive.iter().any(|&p| !p));
            let a = roc_auc(&scores, &positive).unwrap();
            prop_assert!((a - brute_auc(&scores, &positive)).abs() <= 1e-10);
        }

        #[test]
        fn kappa_matches_direct_formula_and_counts_conserve(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 200),
        ) {
            let actual: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let predicted: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let m = ConfusionMatrix::from_predictions(3, &actual, &predicted).unwrap();
            prop_assert_eq!(m.total(), 200);
            for c in 0..3 {
                prop_assert_eq!(m.row_sum(c) as usize, actual.iter().filter(|&&a| a == c).count());
            }
            if let Some(k) = m.kappa() {
                prop_assert!((k - brute_kappa(&m)).abs() <= 1e-10);
                prop_assert!((-1.0..=1.0).contains(&k));
            }
        }
    }
}
