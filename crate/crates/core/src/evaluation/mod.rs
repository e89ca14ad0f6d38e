//! Corrupted evaluation conditions, trial scoring and equal error rate.

pub mod condition;
pub mod eer;
pub mod report;
pub mod trials;

pub use condition::{build_condition, rebuild_condition, ConditionSpec, SNR_RANGES};
pub use eer::{compute_eer, eer_from_points, roc_points, EerResult, OperatingPoint};
pub use report::EerTable;
pub use trials::{score_trials, Label, ScoreSet, Trial, TrialSet};
