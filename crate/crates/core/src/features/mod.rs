//! The thirteen tweet and account metadata features, their per-class
//! summaries and significance tests.

mod stats;
mod vector;

pub use stats::{
    account_age_fraction, crossgroup_ratio, default_account_cutoff, drug_stats, group_means, mean_ratio, stats_report,
    student_t_two_sided, welch_ttest, write_stats_csv, DrugStats, FeatureRow, GroupSummary, Ratio, RatioDirection,
    TTestResult,
};
pub use vector::{
    extract_features, read_features_csv, write_features_csv, EntityMode, FeatureGroup, FeatureName, FeatureVector,
    FEATURE_COUNT,
};
