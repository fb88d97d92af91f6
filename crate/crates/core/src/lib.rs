//! Counterfactual explanations and Shapley attributions for decisions made
//! by scoring-based systems.

pub mod data;
pub mod decision;
pub mod error;
pub mod experiments;
pub mod imputation;
pub mod models;
pub mod schema;
pub mod search;
pub mod shapley;

pub use data::{compute_stats, load_csv, split, write_csv, ColumnStats, CsvOptions, Dataset};
pub use decision::{
    apply_counterfactual, decide, is_causal, is_explanation, Decision, DecisionRule,
    DecisionSystem, Scorer, DEFAULT_POWER_SET_BOUND,
};
pub use error::{Error, Result};
pub use experiments::{
    bench_consistency, credit_study, donation_study, repro_examples, run_case_study,
    targeting_study, BenchResult, CaseStudy, ConsistencyConfig, CreditConfig, DonationConfig,
    TargetingStudyConfig,
};
pub use imputation::{
    build_stats_policy, fit_model_based, CounterfactualPolicy, CounterfactualRule,
};
pub use models::{percentile_threshold, ScoringFunction};
pub use schema::{Feature, FeatureKind, FeatureSchema, FeatureSet, Instance};
pub use search::{
    ebe_search, oracle_all_explanations, reduce_to_irreducible, CostFunction, Explanation,
    Reduction, SearchConfig, SearchOrdering,
};
pub use shapley::{
    shapley_exact, shapley_permutation_sample, shapley_sampled, topk_matches, AttributionTarget,
    ShapleyMethod, ShapleyReport,
};
