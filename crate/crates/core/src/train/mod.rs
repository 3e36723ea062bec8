//! Training loop, class balancing, learning-rate schedule, early stopping,
//! random hyperparameter search and k-fold cross-validation.

mod cv;
mod metrics;
mod optim;
mod sampling;
mod search;
mod trainer;

pub use cv::{kfold_cv, kfold_partition, CvReport, FoldMetrics};
pub use metrics::{r_squared, EvalMetrics};
pub use optim::{learning_rate, Adam, LR_DECAY_EVERY};
pub use sampling::{split_and_oversample, BalancedSplit, Labeled};
pub use search::{hyper_search, sample_hyper, SearchTrial};
pub use trainer::{evaluate_set, train_model, write_trace_csv, TraceRow, TrainConfig, TrainOutcome};
