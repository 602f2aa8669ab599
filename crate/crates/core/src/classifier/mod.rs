//! Logistic-regression detection of rogue tweets from their metadata
//! features, with the split-and-repeat evaluation protocol.

mod evaluate;
mod logreg;
mod metrics;

pub use evaluate::{
    eval_table_text, evaluate, write_eval_runs, write_eval_table, EvalConfig, EvalReport, MeanMetrics, RunResult,
    MAX_REDRAWS,
};
pub use logreg::{
    load_logreg, logreg_from_str, logreg_to_string, save_logreg, sigmoid, train, train_traced, LogRegModel, Objective,
    Scale, Standardizer, TrainConfig, TrainTrace, PARAM_COUNT,
};
pub use metrics::{average_precision, compute_metrics, Confusion, Metrics, DECISION_THRESHOLD};
