use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::consistency::{TargetingModel, TargetingModelConfig, DEFAULT_QUANTILES};
use super::{with_regeneration, BenchResult, Check};
use crate::error::{Error, Result};
use crate::imputation::CounterfactualPolicy;
use crate::schema::FeatureSchema;
use crate::search::{ebe_search, CostFunction, Explanation, SearchConfig, SearchOrdering};

/// Settings of the popularity-cost comparison on the page-like data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetingStudyConfig {
    pub model: TargetingModelConfig,
    pub quantiles: Vec<(usize, usize)>,
    pub users_per_quantile: usize,
    pub max_candidates: usize,
    pub max_iteration: usize,
}

impl Default for TargetingStudyConfig {
    fn default() -> Self {
        TargetingStudyConfig {
            model: TargetingModelConfig::default(),
            quantiles: DEFAULT_QUANTILES.to_vec(),
            users_per_quantile: 10,
            max_candidates: 200_000,
            max_iteration: 30,
        }
    }
}

struct Pair {
    quantile: usize,
    plain: Option<Explanation>,
    costed: Option<Explanation>,
}

fn mean_popularity(e: &Explanation, counts: &[usize]) -> f64 {
    e.set.iter().map(|j| counts[j] as f64).sum::<f64>() / e.set.len() as f64
}

fn names(e: &Option<Explanation>, schema: &FeatureSchema) -> Value {
    e.as_ref()
        .map_or(Value::Null, |e| json!(schema.set_names(&e.set).join(" ")))
}

/// First explanations of targeted users with and without a cost of
/// `1 / popularity` per page, popularity being the page's like count among
/// training users (pages nobody liked cost infinity).
pub fn targeting_study(config: &TargetingStudyConfig, seed: u64) -> Result<BenchResult> {
    if config.users_per_quantile == 0 || config.quantiles.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one quantile and one user per quantile".into(),
        ));
    }
    let (model, used_seed) = with_regeneration(seed, |s| TargetingModel::build(&config.model, s))?;
    let schema = model.world.schema()?;
    let counts = &model.like_counts;
    let costs = CostFunction::new(
        counts
            .iter()
            .map(|&c| {
                if c == 0 {
                    f64::INFINITY
                } else {
                    1.0 / c as f64
                }
            })
            .collect(),
    )?;
    let groups = model.targeted_users(
        &config.quantiles,
        config.users_per_quantile,
        config.max_candidates,
        used_seed,
    )?;
    let plain = SearchConfig {
        max_iteration: config.max_iteration,
        ..SearchConfig::default()
    };
    let costed = SearchConfig {
        ordering: SearchOrdering::ScorePerCostDescending(costs),
        ..plain.clone()
    };
    let policy = CounterfactualPolicy::zero(model.world.pages());

    let jobs: Vec<(usize, &Vec<usize>)> = groups
        .iter()
        .enumerate()
        .flat_map(|(q, (users, _))| users.iter().map(move |u| (q, u)))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|&(quantile, pages)| {
            let instance = model.world.instance(pages);
            let first = |c: &SearchConfig| -> Result<Option<Explanation>> {
                Ok(ebe_search(&model.system, &instance, &policy, c)?
                    .into_iter()
                    .next())
            };
            Ok(Pair {
                quantile,
                plain: first(&plain)?,
                costed: first(&costed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(pairs.len());
    let (mut plain_pop, mut costed_pop) = (Vec::new(), Vec::new());
    for (user, pair) in pairs.iter().enumerate() {
        let p = pair.plain.as_ref().map(|e| mean_popularity(e, counts));
        let c = pair.costed.as_ref().map(|e| mean_popularity(e, counts));
        if let (Some(p), Some(c)) = (p, c) {
            plain_pop.push(p);
            costed_pop.push(c);
        }
        rows.push(vec![
            json!(user),
            json!(pair.quantile + 1),
            names(&pair.plain, &schema),
            json!(p),
            names(&pair.costed, &schema),
            json!(c),
        ]);
    }
    let avg = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let (plain_mean, costed_mean) = (avg(&plain_pop), avg(&costed_pop));
    let passed = !plain_pop.is_empty() && costed_mean > plain_mean;
    Ok(BenchResult {
        experiment: "targeting".into(),
        seed: used_seed,
        config: serde_json::to_value(config).unwrap_or(Value::Null),
        columns: [
            "user",
            "quantile",
            "without_cost",
            "without_cost_popularity",
            "with_cost",
            "with_cost_popularity",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        checks: vec![Check::new(
            "cost_prefers_popular_pages",
            passed,
            format!(
                "mean popularity {costed_mean:.3} with cost vs {plain_mean:.3} without over {} pairs",
                plain_pop.len()
            ),
        )],
        summary: json!({
            "threshold": model.threshold,
            "pairs": plain_pop.len(),
            "mean_popularity_without_cost": plain_mean,
            "mean_popularity_with_cost": costed_mean,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::generators::LikesConfig;

    #[test]
    fn costs_shift_explanations_toward_popular_pages() {
        let config = TargetingStudyConfig {
            model: TargetingModelConfig {
                generator: LikesConfig {
                    pages: 300,
                    max_likes: 60,
                    ..LikesConfig::default()
                },
                training_users: 1500,
                epochs: 300,
                top_fraction: 0.05,
                ..TargetingModelConfig::default()
            },
            quantiles: vec![(20, 40), (40, 60)],
            users_per_quantile: 5,
            max_candidates: 20_000,
            max_iteration: 30,
        };
        let r = targeting_study(&config, 2).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert_eq!(
            r.to_json().unwrap(),
            targeting_study(&config, 2).unwrap().to_json().unwrap()
        );
    }
}
