use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::generators::{LikesConfig, LikesWorld};
use super::{derive_seed, trend_holds, with_regeneration, BenchResult, Check, Trend};
use crate::decision::{DecisionRule, DecisionSystem};
use crate::error::{Error, Result};
use crate::imputation::CounterfactualPolicy;
use crate::models::{
    fit_objective, sigmoid, top_fraction_threshold, LogisticConfig, LogisticObjective, TrainReport,
};
use crate::schema::{FeatureSet, Instance};
use crate::search::{ebe_search, SearchConfig};
use crate::shapley::{shapley_sampled, topk_matches, AttributionTarget};

/// The like-count bins users are grouped into.
pub const DEFAULT_QUANTILES: [(usize, usize); 5] =
    [(4, 17), (18, 33), (34, 58), (59, 98), (99, 200)];

/// Population, model and targeting rule shared by the page-like harnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetingModelConfig {
    pub generator: LikesConfig,
    pub training_users: usize,
    pub l2: f64,
    pub epochs: usize,
    /// Share of training users the rule targets.
    pub top_fraction: f64,
}

impl Default for TargetingModelConfig {
    fn default() -> Self {
        TargetingModelConfig {
            generator: LikesConfig::default(),
            training_users: 10_000,
            l2: 1e-3,
            epochs: 3_000,
            top_fraction: 0.01,
        }
    }
}

pub(crate) struct TargetingModel {
    pub world: LikesWorld,
    pub system: DecisionSystem,
    pub threshold: f64,
    /// Likes each page received from the training users.
    pub like_counts: Vec<usize>,
    pub positive_rate: f64,
    pub report: TrainReport,
}

impl TargetingModel {
    pub fn build(config: &TargetingModelConfig, seed: u64) -> Result<Self> {
        if config.training_users < 2 {
            return Err(Error::InvalidArgument(
                "need at least 2 training users".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        let world = LikesWorld::generate(&config.generator, &mut rng)?;
        let m = world.pages();
        let mut rows = Vec::with_capacity(config.training_users);
        let mut labels = Vec::with_capacity(config.training_users);
        let mut like_counts = vec![0; m];
        for _ in 0..config.training_users {
            let likes = world.population_likes(&mut rng)?;
            let pages = world.sample_user(likes, &mut rng)?;
            labels.push(world.label(&pages, &mut rng));
            for &j in &pages {
                like_counts[j] += 1;
            }
            rows.push(pages.into_iter().map(|j| (j, 1.0)).collect::<Vec<_>>());
        }
        let positive_rate = labels.iter().sum::<f64>() / labels.len() as f64;
        let objective = LogisticObjective::from_sparse(rows.clone(), labels, m, config.l2)?;
        let training = LogisticConfig {
            max_epochs: config.epochs,
            ..LogisticConfig::default()
        };
        let (scorer, report) = fit_objective(&objective, &training)?;
        let (weights, intercept) = scorer
            .linear_parts()
            .ok_or_else(|| Error::Model("logistic fit returned a non-linear model".into()))?;
        let scores = rows
            .iter()
            .map(|row| sigmoid(row.iter().fold(intercept, |z, &(j, x)| z + weights[j] * x)))
            .collect();
        let threshold = top_fraction_threshold(scores, config.top_fraction)?;
        Ok(TargetingModel {
            world,
            system: DecisionSystem::new(scorer, DecisionRule::at_least(threshold))?,
            threshold,
            like_counts,
            positive_rate,
            report,
        })
    }

    fn weights(&self) -> (&[f64], f64) {
        self.system
            .scorer
            .linear_parts()
            .expect("targeting scorer is logistic")
    }

    /// Whether a user liking `pages` is targeted.
    pub fn targets(&self, pages: &[usize]) -> Result<bool> {
        let (weights, intercept) = self.weights();
        let z = pages.iter().fold(intercept, |z, &j| z + weights[j]);
        if !self.system.rule.holds(sigmoid(z)) {
            return Ok(false);
        }
        let decision = self.system.decide(&self.world.instance(pages))?;
        Ok(!self.system.is_default(decision))
    }

    /// Up to `wanted` targeted fresh users per like-count bin, drawing at
    /// most `max_candidates` candidates per bin.
    pub fn targeted_users(
        &self,
        quantiles: &[(usize, usize)],
        wanted: usize,
        max_candidates: usize,
        seed: u64,
    ) -> Result<Vec<(Vec<Vec<usize>>, usize)>> {
        quantiles
            .par_iter()
            .enumerate()
            .map(|(q, &(lo, hi))| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 100 + q as u64));
                let mut users = Vec::with_capacity(wanted);
                let mut tried = 0;
                while users.len() < wanted && tried < max_candidates {
                    tried += 1;
                    let likes = rng.random_range(lo..=hi);
                    let pages = self.world.sample_user(likes, &mut rng)?;
                    if self.targets(&pages)? {
                        users.push(pages);
                    }
                }
                Ok((users, tried))
            })
            .collect()
    }
}

fn validate_quantiles(quantiles: &[(usize, usize)], generator: &LikesConfig) -> Result<()> {
    if quantiles.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one like-count bin is required".into(),
        ));
    }
    for &(lo, hi) in quantiles {
        if lo == 0 || lo > hi || hi > generator.max_likes {
            return Err(Error::InvalidArgument(format!(
                "like-count bin [{lo}, {hi}] must satisfy 1 <= lo <= hi <= {}",
                generator.max_likes
            )));
        }
    }
    Ok(())
}

/// Settings of the attribution-consistency benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub model: TargetingModelConfig,
    /// Inclusive like-count bins, sparsest first.
    pub quantiles: Vec<(usize, usize)>,
    pub users_per_quantile: usize,
    pub max_candidates: usize,
    /// Sampled attribution runs per user.
    pub runs: usize,
    pub samples: usize,
    pub k: usize,
    /// One base seed per run; derived from the benchmark seed when absent.
    pub shapley_seeds: Option<Vec<u64>>,
    pub max_iteration: usize,
    /// Adds wall-clock columns, which make rows non-reproducible.
    pub timings: bool,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            model: TargetingModelConfig::default(),
            quantiles: DEFAULT_QUANTILES.to_vec(),
            users_per_quantile: 40,
            max_candidates: 200_000,
            runs: 5,
            samples: 4100,
            k: 3,
            shapley_seeds: None,
            max_iteration: 30,
            timings: false,
        }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::InvalidArgument("runs must be >= 2".into()));
        }
        if self.samples == 0 || self.k == 0 || self.users_per_quantile == 0 {
            return Err(Error::InvalidArgument(
                "samples, k and users per quantile must be >= 1".into(),
            ));
        }
        if let Some(seeds) = &self.shapley_seeds {
            if seeds.len() != self.runs {
                return Err(Error::LengthMismatch {
                    expected: self.runs,
                    actual: seeds.len(),
                });
            }
        }
        validate_quantiles(&self.quantiles, &self.model.generator)
    }

    fn run_seeds(&self, seed: u64) -> Vec<u64> {
        self.shapley_seeds.clone().unwrap_or_else(|| {
            (0..self.runs as u64)
                .map(|r| derive_seed(seed, 10_000 + r))
                .collect()
        })
    }
}

/// Per-bin means of the consistency benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub min_likes: usize,
    pub max_likes: usize,
    pub targeted: usize,
    pub candidates: usize,
    pub mean_matches: Option<f64>,
    pub mean_size: Option<f64>,
    /// Users for which the search found an explanation.
    pub explained: usize,
    pub mean_shapley_ms: Option<f64>,
    pub mean_search_ms: Option<f64>,
}

struct UserOutcome {
    matches: usize,
    size: Option<usize>,
    shapley_ms: f64,
    search_ms: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn evaluate_user(
    model: &TargetingModel,
    config: &ConsistencyConfig,
    run_seeds: &[u64],
    pages: &[usize],
    user: u64,
) -> Result<UserOutcome> {
    let instance: Instance = model.world.instance(pages);
    let policy = CounterfactualPolicy::zero(model.world.pages());
    let active = FeatureSet::new(pages.iter().copied());
    let target = AttributionTarget::Score(&model.system.scorer);

    let started = Instant::now();
    let reports = run_seeds
        .iter()
        .map(|&s| {
            shapley_sampled(
                target,
                &instance,
                &policy,
                &active,
                config.samples,
                derive_seed(s, user),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let matches = topk_matches(&reports, config.k)?;
    let shapley_ms = started.elapsed().as_secs_f64() * 1e3;

    let started = Instant::now();
    let search = SearchConfig {
        max_iteration: config.max_iteration,
        ..SearchConfig::default()
    };
    let explanations = ebe_search(&model.system, &instance, &policy, &search)?;
    let search_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(UserOutcome {
        matches,
        size: explanations.first().map(|e| e.set.len()),
        shapley_ms,
        search_ms,
    })
}

/// Top-`k` agreement of repeated sampled attributions and first-explanation
/// size for targeted users, grouped by how many pages they like.
pub fn bench_consistency(config: &ConsistencyConfig, seed: u64) -> Result<BenchResult> {
    config.validate()?;
    let (model, used_seed) = with_regeneration(seed, |s| TargetingModel::build(&config.model, s))?;
    let run_seeds = config.run_seeds(used_seed);
    let groups = model.targeted_users(
        &config.quantiles,
        config.users_per_quantile,
        config.max_candidates,
        used_seed,
    )?;

    let jobs: Vec<(usize, u64, &Vec<usize>)> = groups
        .iter()
        .enumerate()
        .flat_map(|(q, (users, _))| users.iter().map(move |u| (q, u)))
        .enumerate()
        .map(|(i, (q, u))| (q, i as u64, u))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(_, i, pages)| evaluate_user(&model, config, &run_seeds, pages, i))
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::with_capacity(config.quantiles.len());
    for (q, &(lo, hi)) in config.quantiles.iter().enumerate() {
        let own: Vec<&UserOutcome> = jobs
            .iter()
            .zip(&outcomes)
            .filter(|((jq, _, _), _)| *jq == q)
            .map(|(_, o)| o)
            .collect();
        summaries.push(QuantileSummary {
            min_likes: lo,
            max_likes: hi,
            targeted: own.len(),
            candidates: groups[q].1,
            mean_matches: mean(own.iter().map(|o| o.matches as f64)),
            mean_size: mean(own.iter().filter_map(|o| o.size.map(|s| s as f64))),
            explained: own.iter().filter(|o| o.size.is_some()).count(),
            mean_shapley_ms: mean(own.iter().map(|o| o.shapley_ms)),
            mean_search_ms: mean(own.iter().map(|o| o.search_ms)),
        });
    }
    Ok(consistency_result(config, used_seed, &model, summaries))
}

fn consistency_result(
    config: &ConsistencyConfig,
    seed: u64,
    model: &TargetingModel,
    summaries: Vec<QuantileSummary>,
) -> BenchResult {
    let mut columns: Vec<String> = [
        "quantile",
        "min_likes",
        "max_likes",
        "targeted",
        "candidates",
        "mean_matches",
        "mean_size",
        "explained",
    ]
    .map(String::from)
    .to_vec();
    if config.timings {
        columns.extend(["mean_shapley_ms".to_string(), "mean_search_ms".to_string()]);
    }
    let rows = summaries
        .iter()
        .enumerate()
        .map(|(q, s)| {
            let mut row = vec![
                json!(q + 1),
                json!(s.min_likes),
                json!(s.max_likes),
                json!(s.targeted),
                json!(s.candidates),
                json!(s.mean_matches),
                json!(s.mean_size),
                json!(s.explained),
            ];
            if config.timings {
                row.extend([json!(s.mean_shapley_ms), json!(s.mean_search_ms)]);
            }
            row
        })
        .collect();

    let matches: Vec<f64> = summaries.iter().filter_map(|s| s.mean_matches).collect();
    let sizes: Vec<f64> = summaries.iter().filter_map(|s| s.mean_size).collect();
    let empty: Vec<usize> = summaries
        .iter()
        .enumerate()
        .filter(|(_, s)| s.targeted == 0)
        .map(|(q, _)| q + 1)
        .collect();
    let note = if empty.is_empty() {
        String::new()
    } else {
        format!(" (empty quantiles {empty:?} skipped)")
    };
    let checks = vec![
        Check::new(
            "matches_non_increasing",
            trend_holds(&matches, Trend::NonIncreasing),
            format!("{matches:?}{note}"),
        ),
        Check::new(
            "size_non_decreasing",
            trend_holds(&sizes, Trend::NonDecreasing),
            format!("{sizes:?}{note}"),
        ),
    ];
    let mut summary = json!({
        "threshold": model.threshold,
        "positive_rate": model.positive_rate,
        "training": model.report,
        "mean_matches": matches,
        "mean_size": sizes,
        "empty_quantiles": empty,
    });
    if config.timings {
        let total = |f: fn(&QuantileSummary) -> Option<f64>| -> Value {
            json!(summaries.iter().filter_map(f).sum::<f64>())
        };
        summary["shapley_ms"] = total(|s| s.mean_shapley_ms);
        summary["search_ms"] = total(|s| s.mean_search_ms);
    }
    BenchResult {
        experiment: "consistency".into(),
        seed,
        config: serde_json::to_value(config).unwrap_or(Value::Null),
        columns,
        rows,
        checks,
        summary,
    }
}
