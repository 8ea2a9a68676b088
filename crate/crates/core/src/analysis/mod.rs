//! Statistical procedures over scored pairs.

mod agreement;
mod baseline;
mod roc;
mod sweep;
mod threshold;

pub use agreement::{bland_altman, correlate, BlandAltmanReport, CorrelationReport, Normalization};
pub use baseline::{percentile, similarity_baseline, SimilarityBaseline};
pub use roc::{
    eer, fnmr_at_fmr, fnmr_at_fmr_strict, mann_whitney_auc, roc, verification_metrics, EerPoint, FnmrAtFmr, RocCurve,
    RocPoint, VerificationMetrics,
};
pub use sweep::{lookalike_sweep, SweepRow};
pub use threshold::{
    above_threshold_table, scored_items, twin_threshold, AboveThresholdTable, ScoreSource, TableRow, TwinThreshold,
};
