//! Training, evaluation metrics and experiment drivers.

mod evaluate;
mod experiments;
mod fit;
mod metrics;
mod report;

pub use evaluate::{evaluate, predict_probabilities, score, Evaluation, MetricsReport};
pub use experiments::{
    ablate, augmentation_ab, fold_seed, loso_evaluate, pooled_confusion, time_inference, write_ablation_csv, AbRow,
    AblationRow, LosoFold, LosoReport, TimingReport, TIMING_WARMUP,
};
pub use fit::{argmax_rows, fit, train, EpochRecord, History, TrainConfig};
pub use metrics::{cross_subject_stats, roc_auc, roc_curve, ConfusionMatrix, RocPoint};
pub use report::{write_confusion_csv, write_history_csv, write_roc_csv};
