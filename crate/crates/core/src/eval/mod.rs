//! Retrieval metrics and the hyperparameter grid search.

mod grid;
mod metrics;

pub use grid::{
    run_grid, CorpusEvaluator, EvalSettings, GridOutcome, Metrics, Objective, ParameterGrid,
    Theta, TrialFailure, TrialResult, QUERY_TIME_FLOOR,
};
pub use metrics::{
    f1, precision_recall, query_time_stats, recall_at_k, time_stats, CdfPoint, Judgments,
    QueryTimeStats,
};
