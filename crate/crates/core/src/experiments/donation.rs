use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::generators::donation_dataset;
use super::{derive_seed, train_standardized_logistic, with_regeneration, BenchResult, Check};
use crate::data::{compute_stats, split, Dataset};
use crate::decision::{is_causal, DecisionRule, DecisionSystem};
use crate::error::{Error, Result};
use crate::imputation::{build_stats_policy, CounterfactualPolicy};
use crate::models::{percentile_threshold, train_linear, ScoringFunction};
use crate::schema::FeatureSet;
use crate::search::{ebe_search, SearchConfig};
use crate::shapley::{active_features, shapley_sampled, AttributionTarget};

/// Settings of the synthetic donation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonationConfig {
    pub households: usize,
    pub train_fraction: f64,
    /// Share of training households with the largest expected gift to target.
    pub top_fraction: f64,
    pub l2: f64,
    pub amount_l2: f64,
    /// Targeted holdout households to explain.
    pub max_instances: usize,
    pub samples: usize,
    pub max_iteration: usize,
}

impl Default for DonationConfig {
    fn default() -> Self {
        DonationConfig {
            households: 20_000,
            train_fraction: 0.7,
            top_fraction: 0.05,
            l2: 1e-4,
            amount_l2: 1e-3,
            max_instances: 30,
            samples: 2000,
            max_iteration: 30,
        }
    }
}

struct Prepared {
    system: DecisionSystem,
    holdout: Dataset,
    policy: CounterfactualPolicy,
    threshold: f64,
}

fn prepare(config: &DonationConfig, seed: u64) -> Result<Prepared> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let generated = donation_dataset(config.households, &mut rng)?;
    let split_seed = derive_seed(seed, 1);
    let (train, holdout) = split(&generated.data, config.train_fraction, split_seed)?;
    let by_amount = generated
        .data
        .clone()
        .with_target(Some(generated.amounts))?;
    let (amount_train, _) = split(&by_amount, config.train_fraction, split_seed)?;

    let (respond, _) = train_standardized_logistic(&train, config.l2)?;
    let donors: Vec<bool> = train
        .target()
        .unwrap_or_default()
        .iter()
        .map(|&y| y == 1.0)
        .collect();
    let (amount, _) = train_linear(&amount_train.filter(&donors)?, config.amount_l2)?;
    let expected = ScoringFunction::product(vec![respond, amount])?;
    let threshold = percentile_threshold(&expected, &train, config.top_fraction)?;
    let policy = build_stats_policy(&compute_stats(&train, None)?, train.schema())?;
    Ok(Prepared {
        system: DecisionSystem::new(expected, DecisionRule::at_least(threshold))?,
        holdout,
        policy,
        threshold,
    })
}

struct Case {
    row: usize,
    explanations: Vec<FeatureSet>,
    causal: bool,
    top: Vec<usize>,
    /// Features with negative attribution that appear in an explanation.
    negative_in_explanations: Vec<usize>,
}

/// Targets households by response probability times predicted gift and
/// sets explanations beside decision attributions for targeted holdout
/// households, reporting features whose attribution is negative yet which
/// appear in an explanation.
pub fn donation_study(config: &DonationConfig, seed: u64) -> Result<BenchResult> {
    if config.max_instances == 0 || config.samples == 0 {
        return Err(Error::InvalidArgument(
            "max_instances and samples must be >= 1".into(),
        ));
    }
    let (prepared, used_seed) = with_regeneration(seed, |s| prepare(config, s))?;
    let Prepared {
        system,
        holdout,
        policy,
        threshold,
    } = &prepared;
    let schema = holdout.schema();
    let targeted: Vec<usize> = holdout
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            system
                .decide(r)
                .map(|d| !system.is_default(d))
                .unwrap_or(false)
        })
        .map(|(i, _)| i)
        .take(config.max_instances)
        .collect();
    if targeted.is_empty() {
        return Err(Error::Empty("no targeted holdout households".into()));
    }
    let search = SearchConfig {
        max_iteration: config.max_iteration,
        ..SearchConfig::default()
    };

    let cases = targeted
        .par_iter()
        .map(|&row| {
            let instance = &holdout.rows()[row];
            let explanations: Vec<FeatureSet> = ebe_search(system, instance, policy, &search)?
                .into_iter()
                .map(|e| e.set)
                .collect();
            let mut causal = true;
            for set in &explanations {
                causal &= is_causal(system, instance, set, policy)?;
            }
            let active = active_features(instance, policy)?;
            let report = shapley_sampled(
                AttributionTarget::DecisionIndicator(system),
                instance,
                policy,
                &active,
                config.samples,
                derive_seed(used_seed, 1_000 + row as u64),
            )?;
            let negative_in_explanations = active
                .iter()
                .filter(|&j| report.value_of(j) < 0.0 && explanations.iter().any(|s| s.contains(j)))
                .collect();
            Ok(Case {
                row,
                explanations,
                causal,
                top: report.top_k(3),
                negative_in_explanations,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let names = |set: &[usize]| -> String {
        set.iter()
            .map(|&j| schema.name(j))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let rows: Vec<Vec<Value>> = cases
        .iter()
        .map(|c| {
            let sets: Vec<String> = c.explanations.iter().map(|s| names(s.indices())).collect();
            vec![
                json!(c.row),
                json!(sets.join(" | ")),
                json!(names(&c.top)),
                json!(names(&c.negative_in_explanations)),
            ]
        })
        .collect();
    let reported: Vec<usize> = cases
        .iter()
        .filter(|c| !c.negative_in_explanations.is_empty())
        .map(|c| c.row)
        .collect();
    let non_causal = cases.iter().filter(|c| !c.causal).count();
    Ok(BenchResult {
        experiment: "donation".into(),
        seed: used_seed,
        config: serde_json::to_value(config).unwrap_or(Value::Null),
        columns: [
            "row",
            "explanations",
            "top_shapley",
            "negative_shapley_in_explanation",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        checks: vec![Check::new(
            "explanations_causal",
            non_causal == 0,
            format!("{non_causal} households with a non-causal explanation"),
        )],
        summary: json!({
            "threshold": threshold,
            "targeted": cases.len(),
            "explained": cases.iter().filter(|c| !c.explanations.is_empty()).count(),
            "negative_shapley_in_explanation": reported,
        }),
    })
}
