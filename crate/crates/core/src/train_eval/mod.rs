//! Training with early stopping, and confusion-matrix metrics.

mod metrics;
mod train;

pub use metrics::{confusion_matrix, ClassMetrics, ConfusionMatrix, MetricsReport, Tally};
pub use train::{
    carve_validation, class_names, evaluate, run_epochs, score, train, Dataset, EarlyStopping, EpochLog, Evaluation,
    Progress, TrainConfig, TrainOutcome, TrainingRun,
};

#[cfg(test)]
mod tests;
