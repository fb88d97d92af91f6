use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::generators::credit_dataset;
use super::{derive_seed, train_standardized_logistic, with_regeneration, BenchResult, Check};
use crate::data::{compute_stats, split, Dataset};
use crate::decision::{is_causal, is_explanation, DecisionRule, DecisionSystem};
use crate::error::{Error, Result};
use crate::imputation::{build_stats_policy, fit_model_based, CounterfactualPolicy};
use crate::schema::{FeatureSchema, FeatureSet};
use crate::search::{ebe_search, oracle_all_explanations, Explanation, SearchConfig};

/// Settings of the synthetic credit study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreditConfig {
    pub applicants: usize,
    pub train_fraction: f64,
    /// Applications with a default probability above this are denied.
    pub threshold: f64,
    pub l2: f64,
    /// Ridge penalty of the model-based imputation regressions.
    pub imputation_l2: f64,
    /// Denied holdout applicants to explain.
    pub max_instances: usize,
    pub max_iteration: usize,
    pub power_set_bound: usize,
}

impl Default for CreditConfig {
    fn default() -> Self {
        CreditConfig {
            applicants: 4000,
            train_fraction: 0.7,
            threshold: 0.23,
            l2: 1e-4,
            imputation_l2: 1.0,
            max_instances: 40,
            max_iteration: 30,
            power_set_bound: 12,
        }
    }
}

struct Prepared {
    system: DecisionSystem,
    holdout: Dataset,
    policies: [(&'static str, CounterfactualPolicy); 2],
    denied_rate: f64,
}

fn prepare(config: &CreditConfig, seed: u64) -> Result<Prepared> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let data = credit_dataset(config.applicants, &mut rng)?;
    let (train, holdout) = split(&data, config.train_fraction, derive_seed(seed, 1))?;
    let (model, _) = train_standardized_logistic(&train, config.l2)?;
    let system = DecisionSystem::new(model, DecisionRule::above(config.threshold))?;
    let approved = train
        .rows()
        .iter()
        .map(|r| Ok(system.is_default(system.decide(r)?)))
        .collect::<Result<Vec<bool>>>()?;
    if !approved.iter().any(|&a| a) {
        return Err(Error::Empty("no approved training applicants".into()));
    }
    let denied_rate = approved.iter().filter(|&&a| !a).count() as f64 / approved.len() as f64;
    let mean = build_stats_policy(&compute_stats(&train, Some(&approved))?, train.schema())?;
    let model_based = fit_model_based(&train, &approved, config.imputation_l2)?;
    Ok(Prepared {
        system,
        holdout,
        policies: [("mean", mean), ("model_based", model_based)],
        denied_rate,
    })
}

struct Case {
    row: usize,
    /// Per policy: search output and oracle output.
    results: Vec<(Vec<Explanation>, Vec<Explanation>)>,
    /// Explanations failing causality or irreducibility, as text.
    invalid: Vec<String>,
    /// Search explanations missing from the oracle's list.
    unmatched: Vec<String>,
}

fn sets(explanations: &[Explanation]) -> Vec<FeatureSet> {
    let mut s: Vec<FeatureSet> = explanations.iter().map(|e| e.set.clone()).collect();
    s.sort_by(|a, b| a.indices().cmp(b.indices()));
    s
}

fn differences(e: &Explanation, schema: &FeatureSchema) -> String {
    e.substituted
        .iter()
        .map(|s| {
            format!(
                "{}={:+.4}",
                schema.name(s.feature),
                s.observed - s.counterfactual
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Explains denied holdout applicants of a logistic default model under
/// mean and model-based imputation, checking every explanation against
/// causality, irreducibility and the exhaustive oracle.
pub fn credit_study(config: &CreditConfig, seed: u64) -> Result<BenchResult> {
    if config.max_instances == 0 {
        return Err(Error::InvalidArgument("max_instances must be >= 1".into()));
    }
    let (prepared, used_seed) = with_regeneration(seed, |s| prepare(config, s))?;
    let Prepared {
        system,
        holdout,
        policies,
        denied_rate,
    } = &prepared;
    let schema = holdout.schema();
    let denied: Vec<usize> = holdout
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
    if denied.is_empty() {
        return Err(Error::Empty("no denied holdout applicants".into()));
    }
    let search = SearchConfig {
        max_iteration: config.max_iteration,
        power_set_bound: config.power_set_bound,
        ..SearchConfig::default()
    };

    let cases = denied
        .par_iter()
        .map(|&row| {
            let instance = &holdout.rows()[row];
            let mut case = Case {
                row,
                results: Vec::new(),
                invalid: Vec::new(),
                unmatched: Vec::new(),
            };
            for (name, policy) in policies {
                let found = ebe_search(system, instance, policy, &search)?;
                let oracle = oracle_all_explanations(
                    system,
                    instance,
                    policy,
                    config.power_set_bound,
                    &FeatureSet::empty(),
                )?;
                let oracle_sets = sets(&oracle);
                for e in found.iter().chain(&oracle) {
                    let ok = is_causal(system, instance, &e.set, policy)?
                        && is_explanation(
                            system,
                            instance,
                            &e.set,
                            policy,
                            config.power_set_bound,
                        )?;
                    if !ok {
                        case.invalid
                            .push(format!("row {row} {name} {:?}", schema.set_names(&e.set)));
                    }
                }
                for e in &found {
                    if !oracle_sets.contains(&e.set) {
                        case.unmatched
                            .push(format!("row {row} {name} {:?}", schema.set_names(&e.set)));
                    }
                }
                case.results.push((found, oracle));
            }
            Ok(case)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut changed = 0;
    let mut explanations = 0;
    for case in &cases {
        if sets(&case.results[0].1) != sets(&case.results[1].1) {
            changed += 1;
        }
        for ((name, _), (found, oracle)) in policies.iter().zip(&case.results) {
            explanations += found.len() + oracle.len();
            for (rank, e) in found.iter().enumerate() {
                rows.push(vec![
                    json!(case.row),
                    json!(name),
                    json!(rank + 1),
                    json!(schema.set_names(&e.set).join(" ")),
                    json!(differences(e, schema)),
                    json!(e.score_before),
                    json!(e.score_after),
                    json!(oracle.len()),
                ]);
            }
        }
    }
    let invalid: Vec<&String> = cases.iter().flat_map(|c| &c.invalid).collect();
    let unmatched: Vec<&String> = cases.iter().flat_map(|c| &c.unmatched).collect();
    let checks = vec![
        Check::new(
            "imputation_changes_explanations",
            changed > 0,
            format!("{changed} of {} denied applicants", cases.len()),
        ),
        Check::new(
            "explanations_causal_and_irreducible",
            invalid.is_empty(),
            if invalid.is_empty() {
                format!("{explanations} explanations verified")
            } else {
                format!("{} invalid, first {}", invalid.len(), invalid[0])
            },
        ),
        Check::new(
            "search_within_oracle",
            unmatched.is_empty(),
            if unmatched.is_empty() {
                "every search explanation is in the oracle list".to_string()
            } else {
                format!("{} missing, first {}", unmatched.len(), unmatched[0])
            },
        ),
    ];
    Ok(BenchResult {
        experiment: "credit".into(),
        seed: used_seed,
        config: serde_json::to_value(config).unwrap_or(Value::Null),
        columns: [
            "row",
            "policy",
            "rank",
            "features",
            "observed_minus_default",
            "score_before",
            "score_after",
            "oracle_explanations",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        checks,
        summary: json!({
            "denied_rate": denied_rate,
            "explained": cases.len(),
            "changed_by_imputation": changed,
        }),
    })
}
