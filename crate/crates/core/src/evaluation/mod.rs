//! Binary hypernym prediction, graded entailment scoring and diagnostics.

mod binary;
mod diagnostics;
mod graded;

pub use binary::{
    accuracy_at, best_threshold, binary_accuracy, pair_scores, tune_threshold, LabeledPair,
    LabeledPairSet, ThresholdFit,
};
pub use diagnostics::{kl_matrix, volume_report};
pub use graded::{
    evaluate_graded, fractional_ranks, graded_score, impute_missing, median, spearman,
    GradedPair, GradedReport,
};
