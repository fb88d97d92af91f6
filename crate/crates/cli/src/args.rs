use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cfx",
    version,
    about = "Counterfactual explanations and Shapley attributions for scoring-based decisions"
)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a logistic or ridge model on a CSV file.
    Train(TrainArgs),
    /// Search for counterfactual explanations of one decision.
    Explain(ExplainArgs),
    /// Shapley attributions of one instance.
    Shap(ShapArgs),
    /// Run a benchmark harness.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Classify,
    Regress,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Label column.
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum, default_value_t = Task::Classify)]
    pub task: Task,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Fit on z-scored features; the scaling is stored with the model.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 10_000)]
    pub max_epochs: usize,
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Example1,
    Example2,
    Example3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleKind {
    /// Positive decision when `score >= threshold`.
    AtLeast,
    /// Positive decision when `score > threshold`.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Zero,
    Mean,
    Mode,
    ModelBased,
}

/// How the decision system, the instance and the counterfactual values are
/// obtained.
#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Built-in three-feature example; needs no files.
    #[arg(long, value_enum, conflicts_with_all = ["model", "model2"])]
    pub demo: Option<Demo>,
    /// Model document written by `cfx train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Second model; the score is the product of both.
    #[arg(long, requires = "model")]
    pub model2: Option<PathBuf>,
    #[arg(long, conflicts_with = "top_fraction")]
    pub threshold: Option<f64>,
    /// Threshold selecting this share of the --reference rows.
    #[arg(long, requires = "reference")]
    pub top_fraction: Option<f64>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RuleKind::AtLeast)]
    pub rule: RuleKind,
    /// CSV holding the instance when --instance is a row index.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column dropped from every CSV read.
    #[arg(long)]
    pub label: Option<String>,
    /// Row index into --data, or inline JSON: an array of values or an
    /// object from feature name to value.
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long, value_enum, default_value_t = PolicyKind::Zero)]
    pub policy: PolicyKind,
    /// Population the mean, mode or model-based values are computed from.
    #[arg(long)]
    pub policy_data: Option<PathBuf>,
    /// Restrict the policy population to rows receiving the default
    /// decision.
    #[arg(long)]
    pub policy_default_only: bool,
    /// Ridge penalty of the model-based imputation regressions.
    #[arg(long, default_value_t = 1.0)]
    pub imputation_l2: f64,
    /// Policy document to load instead of building one.
    #[arg(long, conflicts_with_all = ["policy_data"])]
    pub policy_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 30)]
    pub max_iter: usize,
    /// Feature costs as JSON `{"name": cost}`, inline or a file path.
    /// Unlisted features cost 1.
    #[arg(long)]
    pub costs: Option<String>,
    /// Features never removed, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    /// List every explanation by exhaustive enumeration.
    #[arg(long)]
    pub all: bool,
    /// Largest explanation listed with --all.
    #[arg(long, requires = "all")]
    pub max_size: Option<usize>,
    #[arg(long, default_value_t = cfx_core::DEFAULT_POWER_SET_BOUND)]
    pub power_set_bound: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    Score,
    Decision,
}

#[derive(Debug, Args)]
pub struct ShapArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Enumerate every joining order.
    #[arg(long, conflicts_with = "samples")]
    pub exact: bool,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Top features compared across runs.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Attribute the raw score or the 0/1 decision indicator.
    #[arg(long, value_enum, default_value_t = TargetKind::Score)]
    pub target: TargetKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Examples,
    Consistency,
    Credit,
    Targeting,
    Donation,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Sampled attribution runs per user (consistency).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Permutations per sampled attribution.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub users_per_quantile: Option<usize>,
    /// Pages of the synthetic like data.
    #[arg(long)]
    pub pages: Option<usize>,
    #[arg(long)]
    pub training_users: Option<usize>,
    /// Rows generated for the credit and donation studies.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Instances explained by the credit and donation studies.
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub max_iteration: Option<usize>,
    /// Add wall-clock columns (consistency); rows stop being reproducible.
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}
