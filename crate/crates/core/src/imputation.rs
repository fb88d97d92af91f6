//! Counterfactual-value policies: the values that stand in for a feature
//! once its evidence is removed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnStats, Dataset};
use crate::error::{Error, Result};
use crate::models::{ridge_solve, ScoringFunction};
use crate::schema::{FeatureKind, FeatureSchema, Instance};

pub const POLICY_DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CounterfactualRule {
    Zero,
    Fixed {
        value: f64,
    },
    /// Column mean frozen when the policy was built.
    Mean {
        value: f64,
    },
    /// Column mode frozen when the policy was built.
    Mode {
        value: f64,
    },
    /// Linear prediction from the instance's other observed values. The
    /// weight slot of the feature itself is always zero. Binary features
    /// round the clamped prediction at 0.5, ties going to 0.
    ModelBased {
        weights: Vec<f64>,
        intercept: f64,
        binary: bool,
    },
}

impl CounterfactualRule {
    pub fn name(&self) -> &'static str {
        match self {
            CounterfactualRule::Zero => "zero",
            CounterfactualRule::Fixed { .. } => "fixed",
            CounterfactualRule::Mean { .. } => "mean",
            CounterfactualRule::Mode { .. } => "mode",
            CounterfactualRule::ModelBased { .. } => "model_based",
        }
    }
}

/// One [`CounterfactualRule`] per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualPolicy {
    rules: Vec<CounterfactualRule>,
}

impl CounterfactualPolicy {
    /// Checks the rules against the schema: one per feature, kind
    /// restrictions, conforming fixed values and self-excluding models.
    pub fn new(schema: &FeatureSchema, rules: Vec<CounterfactualRule>) -> Result<Self> {
        let policy = CounterfactualPolicy { rules };
        policy.validate(schema)?;
        Ok(policy)
    }

    /// Every feature removed to 0.
    pub fn zero(m: usize) -> Self {
        CounterfactualPolicy {
            rules: vec![CounterfactualRule::Zero; m],
        }
    }

    pub fn fixed(values: &[f64]) -> Self {
        CounterfactualPolicy {
            rules: values
                .iter()
                .map(|&value| CounterfactualRule::Fixed { value })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[CounterfactualRule] {
        &self.rules
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        if self.rules.len() != schema.len() {
            return Err(Error::Policy(format!(
                "{} rules for {} features",
                self.rules.len(),
                schema.len()
            )));
        }
        for (j, (rule, feature)) in self.rules.iter().zip(schema.features()).enumerate() {
            let bad = |msg: String| Err(Error::Policy(format!("feature {}: {msg}", feature.name)));
            match (rule, &feature.kind) {
                (CounterfactualRule::Zero, FeatureKind::Categorical { .. }) => {
                    return bad("zero rule on a categorical feature".into())
                }
                (CounterfactualRule::Mean { .. }, kind) if *kind != FeatureKind::Numeric => {
                    return bad(format!("mean rule on a {} feature", kind.label()))
                }
                (CounterfactualRule::Mode { .. }, FeatureKind::Numeric) => {
                    return bad("mode rule on a numeric feature".into())
                }
                (
                    CounterfactualRule::Fixed { value }
                    | CounterfactualRule::Mean { value }
                    | CounterfactualRule::Mode { value },
                    kind,
                ) => {
                    if let Err(msg) = kind.conforms(*value) {
                        return bad(msg);
                    }
                }
                (
                    CounterfactualRule::ModelBased {
                        weights, binary, ..
                    },
                    kind,
                ) => {
                    if kind.is_categorical() {
                        return bad("model-based rule on a categorical feature".into());
                    }
                    if weights.len() != schema.len() {
                        return bad(format!("model has {} weights", weights.len()));
                    }
                    if weights[j] != 0.0 {
                        return bad("model uses the feature as its own predictor".into());
                    }
                    if *binary != (*kind == FeatureKind::Binary) {
                        return bad("model binary flag disagrees with the feature kind".into());
                    }
                }
                (CounterfactualRule::Zero, _) => {}
            }
        }
        Ok(())
    }

    /// Counterfactual value of feature `feature` for `instance`.
    pub fn counterfactual_value(&self, instance: &Instance, feature: usize) -> Result<f64> {
        if feature >= instance.len() {
            return Err(Error::IndexOutOfBounds {
                index: feature,
                len: instance.len(),
            });
        }
        let rule = self.rules.get(feature).ok_or(Error::MissingRule(feature))?;
        Ok(match rule {
            CounterfactualRule::Zero => 0.0,
            CounterfactualRule::Fixed { value }
            | CounterfactualRule::Mean { value }
            | CounterfactualRule::Mode { value } => *value,
            CounterfactualRule::ModelBased {
                weights,
                intercept,
                binary,
            } => {
                if weights.len() != instance.len() {
                    return Err(Error::LengthMismatch {
                        expected: weights.len(),
                        actual: instance.len(),
                    });
                }
                let p = crate::models::linear_term(weights, *intercept, instance.values());
                if *binary {
                    if p.clamp(0.0, 1.0) > 0.5 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p
                }
            }
        })
    }

    /// Counterfactual values of every feature, all read from the observed
    /// instance.
    pub fn counterfactual_values(&self, instance: &Instance) -> Result<Vec<f64>> {
        if self.rules.len() != instance.len() {
            return Err(Error::LengthMismatch {
                expected: self.rules.len(),
                actual: instance.len(),
            });
        }
        (0..instance.len())
            .map(|j| self.counterfactual_value(instance, j))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PolicyDocument {
            version: POLICY_DOCUMENT_VERSION,
            rules: self.rules.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDocument = serde_json::from_str(text)?;
        if doc.version != POLICY_DOCUMENT_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: POLICY_DOCUMENT_VERSION,
            });
        }
        Ok(CounterfactualPolicy { rules: doc.rules })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyDocument {
    version: u32,
    rules: Vec<CounterfactualRule>,
}

/// Mean for numeric features, mode for the rest, frozen from `stats`.
pub fn build_stats_policy(
    stats: &ColumnStats,
    schema: &FeatureSchema,
) -> Result<CounterfactualPolicy> {
    if stats.columns.len() != schema.len() {
        return Err(Error::Policy(format!(
            "statistics cover {} columns, schema has {}",
            stats.columns.len(),
            schema.len()
        )));
    }
    let rules = stats
        .columns
        .iter()
        .zip(schema.features())
        .map(|(col, feature)| match (&feature.kind, col.mean, col.mode) {
            (FeatureKind::Numeric, Some(value), _) => Ok(CounterfactualRule::Mean { value }),
            (FeatureKind::Binary | FeatureKind::Categorical { .. }, _, Some(value)) => {
                Ok(CounterfactualRule::Mode { value })
            }
            _ => Err(Error::Policy(format!(
                "statistics for {} do not match its {} kind",
                feature.name,
                feature.kind.label()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    CounterfactualPolicy::new(schema, rules)
}

/// Per feature, a ridge regression of that column on all other columns
/// over the rows selected by `mask`.
pub fn fit_model_based(
    reference: &Dataset,
    mask: &[bool],
    l2: f64,
) -> Result<CounterfactualPolicy> {
    reference.require_numeric_features()?;
    let population = reference.filter(mask)?;
    if population.is_empty() {
        return Err(Error::Empty(
            "no rows selected for model-based imputation".into(),
        ));
    }
    let m = reference.schema().len();
    let mut rules = Vec::with_capacity(m);
    for j in 0..m {
        let predictors: Vec<Vec<f64>> = population
            .rows()
            .iter()
            .map(|r| {
                r.values()
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let rows: Vec<&[f64]> = predictors.iter().map(Vec::as_slice).collect();
        let y = population.column(j);
        let (partial, intercept) = ridge_solve(&rows, &y, l2)?;
        let mut weights = partial;
        weights.insert(j, 0.0);
        rules.push(CounterfactualRule::ModelBased {
            weights,
            intercept,
            binary: reference.schema().kind(j)? == &FeatureKind::Binary,
        });
    }
    CounterfactualPolicy::new(reference.schema(), rules)
}

/// The linear model behind a model-based rule, for inspection.
pub fn rule_model(rule: &CounterfactualRule) -> Option<ScoringFunction> {
    match rule {
        CounterfactualRule::ModelBased {
            weights, intercept, ..
        } => Some(ScoringFunction::linear(weights.clone(), *intercept)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::compute_stats;
    use crate::decision::apply_counterfactual;
    use crate::schema::{Feature, FeatureSet};

    fn mixed_schema() -> FeatureSchema {
        FeatureSchema::new(vec![Feature::numeric("income"), Feature::binary("owner")]).unwrap()
    }

    #[test]
    fn stats_policy_freezes_mean_and_mode() {
        let rows = vec![
            Instance::new(vec![40000.0, 1.0]),
            Instance::new(vec![60000.0, 1.0]),
            Instance::new(vec![50000.0, 0.0]),
        ];
        let d = Dataset::new(mixed_schema(), rows, None).unwrap();
        let stats = compute_stats(&d, None).unwrap();
        let p = build_stats_policy(&stats, d.schema()).unwrap();
        assert_eq!(
            p.rules(),
            &[
                CounterfactualRule::Mean { value: 50000.0 },
                CounterfactualRule::Mode { value: 1.0 }
            ]
        );
        let i = Instance::new(vec![1.0, 0.0]);
        assert_eq!(p.counterfactual_values(&i).unwrap(), vec![50000.0, 1.0]);
    }

    #[test]
    fn sparse_mode_policy_is_the_zero_policy() {
        let schema = FeatureSchema::binary(4).unwrap();
        let rows = vec![
            Instance::new(vec![1.0, 0.0, 0.0, 0.0]),
            Instance::new(vec![0.0, 0.0, 1.0, 0.0]),
            Instance::new(vec![0.0, 0.0, 0.0, 0.0]),
        ];
        let d = Dataset::new(schema, rows, None).unwrap();
        let p = build_stats_policy(&compute_stats(&d, None).unwrap(), d.schema()).unwrap();
        let i = Instance::new(vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            p.counterfactual_values(&i).unwrap(),
            CounterfactualPolicy::zero(4)
                .counterfactual_values(&i)
                .unwrap()
        );
    }

    #[test]
    fn kind_restrictions_are_enforced() {
        let s = mixed_schema();
        let mode_on_numeric = vec![
            CounterfactualRule::Mode { value: 1.0 },
            CounterfactualRule::Zero,
        ];
        assert!(CounterfactualPolicy::new(&s, mode_on_numeric).is_err());
        let mean_on_binary = vec![
            CounterfactualRule::Zero,
            CounterfactualRule::Mean { value: 0.5 },
        ];
        assert!(CounterfactualPolicy::new(&s, mean_on_binary).is_err());
        let bad_fixed = vec![
            CounterfactualRule::Zero,
            CounterfactualRule::Fixed { value: 0.5 },
        ];
        assert!(CounterfactualPolicy::new(&s, bad_fixed).is_err());
        let cat = FeatureSchema::new(vec![Feature::categorical("c", ["a", "b"])]).unwrap();
        assert!(CounterfactualPolicy::new(&cat, vec![CounterfactualRule::Zero]).is_err());
        assert!(CounterfactualPolicy::new(&s, vec![CounterfactualRule::Zero]).is_err());
    }

    fn relation_data() -> Dataset {
        let rows = (1..=6)
            .map(|i| Instance::new(vec![i as f64, 3.0 * i as f64, 7.0]))
            .collect();
        Dataset::new(FeatureSchema::numeric(3).unwrap(), rows, None).unwrap()
    }

    #[test]
    fn model_based_recovers_exact_relation() {
        let d = relation_data();
        let mut mask = vec![true; 6];
        mask[5] = false;
        // Column 2 is constant, so its slot only fits with a penalty.
        let p = fit_model_based(&d, &mask, 1e-9).unwrap();
        let i = Instance::new(vec![4.0, 0.0, 7.0]);
        let x2 = p.counterfactual_value(&i, 1).unwrap();
        assert!((x2 - 12.0).abs() < 1e-6, "{x2}");
        assert!((p.counterfactual_value(&i, 2).unwrap() - 7.0).abs() < 1e-9);
        for (j, rule) in p.rules().iter().enumerate() {
            match rule {
                CounterfactualRule::ModelBased { weights, .. } => assert_eq!(weights[j], 0.0),
                other => panic!("unexpected rule {other:?}"),
            }
        }
        let other = Instance::new(vec![1.0, 0.0, 7.0]);
        assert_ne!(
            p.counterfactual_value(&other, 1).unwrap(),
            p.counterfactual_value(&i, 1).unwrap()
        );
    }

    #[test]
    fn model_based_substitution_is_simultaneous() {
        let p = fit_model_based(&relation_data(), &[true; 6], 1e-9).unwrap();
        let i = Instance::new(vec![2.0, 1.0, 7.0]);
        let both = apply_counterfactual(&i, &FeatureSet::new([0, 1]), &p).unwrap();
        let x0 = p.counterfactual_value(&i, 0).unwrap();
        let x1 = p.counterfactual_value(&i, 1).unwrap();
        assert_eq!(both.values(), &[x0, x1, 7.0]);
    }

    #[test]
    fn model_based_rejects_empty_mask() {
        assert!(matches!(
            fit_model_based(&relation_data(), &[false; 6], 0.0),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn binary_predictions_round_with_ties_to_zero() {
        let rule = |intercept| CounterfactualRule::ModelBased {
            weights: vec![0.0],
            intercept,
            binary: true,
        };
        let i = Instance::new(vec![1.0]);
        let value = |r| {
            CounterfactualPolicy { rules: vec![r] }
                .counterfactual_value(&i, 0)
                .unwrap()
        };
        assert_eq!(value(rule(0.5)), 0.0);
        assert_eq!(value(rule(0.51)), 1.0);
        assert_eq!(value(rule(7.0)), 1.0);
        assert_eq!(value(rule(-3.0)), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let p = fit_model_based(&relation_data(), &[true; 6], 1e-3).unwrap();
        assert_eq!(
            CounterfactualPolicy::from_json(&p.to_json().unwrap()).unwrap(),
            p
        );
    }
}
