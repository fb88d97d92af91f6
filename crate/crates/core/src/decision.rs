//! Decision systems and the counterfactual substitution operator.
//!
//! A [`DecisionSystem`] pairs a [`Scorer`] with a threshold [`DecisionRule`].
//! Evidence is removed from an instance by substituting the counterfactual
//! values supplied by a [`CounterfactualPolicy`]; a feature set is *causal*
//! when that substitution changes the decision, and an *explanation* when it
//! is causal and none of its proper subsets is.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputation::CounterfactualPolicy;
use crate::models::ScoringFunction;
use crate::schema::{FeatureSet, Instance};

/// Largest set whose irreducibility is verified by a full subset scan.
pub const DEFAULT_POWER_SET_BOUND: usize = 12;

/// Relative band around the threshold inside which an incrementally
/// maintained score is recomputed from scratch before deciding.
const BOUNDARY_BAND: f64 = 1e-9;

/// A model-agnostic scoring function over a fixed number of features.
pub trait Scorer: Send + Sync {
    fn n_features(&self) -> usize;

    /// Scores raw values; `values.len()` must equal [`Scorer::n_features`].
    fn score_values(&self, values: &[f64]) -> f64;

    fn score(&self, instance: &Instance) -> Result<f64> {
        if instance.len() != self.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.n_features(),
                actual: instance.len(),
            });
        }
        Ok(self.score_values(instance.values()))
    }

    /// A stateful evaluator starting at `base`. The default recomputes the
    /// full score on every call; scorers with cheaper incremental updates
    /// override it.
    fn evaluator<'a>(&'a self, base: &Instance) -> Box<dyn Evaluator + 'a> {
        Box::new(RecomputeEvaluator::new(self, base))
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn score_values(&self, values: &[f64]) -> f64 {
        (**self).score_values(values)
    }

    fn evaluator<'a>(&'a self, base: &Instance) -> Box<dyn Evaluator + 'a> {
        (**self).evaluator(base)
    }
}

/// Working copy of an instance that can be patched and rescored.
pub trait Evaluator {
    fn set(&mut self, feature: usize, value: f64);
    fn score(&mut self) -> f64;
    /// Restores the base instance exactly.
    fn reset(&mut self);
    fn values(&self) -> &[f64];
}

pub struct RecomputeEvaluator<'a, S: ?Sized> {
    scorer: &'a S,
    base: Vec<f64>,
    values: Vec<f64>,
    touched: Vec<usize>,
}

impl<'a, S: Scorer + ?Sized> RecomputeEvaluator<'a, S> {
    pub fn new(scorer: &'a S, base: &Instance) -> Self {
        RecomputeEvaluator {
            scorer,
            base: base.values().to_vec(),
            values: base.values().to_vec(),
            touched: Vec::new(),
        }
    }
}

impl<S: Scorer + ?Sized> Evaluator for RecomputeEvaluator<'_, S> {
    fn set(&mut self, feature: usize, value: f64) {
        self.values[feature] = value;
        self.touched.push(feature);
    }

    fn score(&mut self) -> f64 {
        self.scorer.score_values(&self.values)
    }

    fn reset(&mut self) {
        for j in self.touched.drain(..) {
            self.values[j] = self.base[j];
        }
    }

    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Identifier of a discrete decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decision(pub u32);

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `score >= threshold`
    AtLeast,
    /// `score > threshold`
    Above,
}

/// Binary threshold rule. Comparisons are exact; no epsilon is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub comparison: Comparison,
    pub threshold: f64,
    pub positive_class: Decision,
    pub default_class: Decision,
}

impl DecisionRule {
    pub fn new(
        comparison: Comparison,
        threshold: f64,
        positive_class: Decision,
        default_class: Decision,
    ) -> Result<Self> {
        if positive_class == default_class {
            return Err(Error::Rule(format!(
                "positive and default class are both {positive_class}"
            )));
        }
        if threshold.is_nan() {
            return Err(Error::Rule("threshold is NaN".into()));
        }
        Ok(DecisionRule {
            comparison,
            threshold,
            positive_class,
            default_class,
        })
    }

    /// `score >= threshold` gives decision 1, otherwise 0.
    pub fn at_least(threshold: f64) -> Self {
        DecisionRule {
            comparison: Comparison::AtLeast,
            threshold,
            positive_class: Decision(1),
            default_class: Decision(0),
        }
    }

    /// `score > threshold` gives decision 1, otherwise 0.
    pub fn above(threshold: f64) -> Self {
        DecisionRule {
            comparison: Comparison::Above,
            ..Self::at_least(threshold)
        }
    }

    pub fn holds(&self, score: f64) -> bool {
        match self.comparison {
            Comparison::AtLeast => score >= self.threshold,
            Comparison::Above => score > self.threshold,
        }
    }

    pub fn apply(&self, score: f64) -> Decision {
        if self.holds(score) {
            self.positive_class
        } else {
            self.default_class
        }
    }

    pub(crate) fn near_boundary(&self, score: f64) -> bool {
        (score - self.threshold).abs() <= BOUNDARY_BAND * self.threshold.abs().max(1.0)
            || !score.is_finite()
    }
}

/// A scoring function plus the rule mapping its scores to decisions.
#[derive(Debug, Clone)]
pub struct DecisionSystem<S = ScoringFunction> {
    pub scorer: S,
    pub rule: DecisionRule,
}

impl<S: Scorer> DecisionSystem<S> {
    pub fn new(scorer: S, rule: DecisionRule) -> Result<Self> {
        let rule = DecisionRule::new(
            rule.comparison,
            rule.threshold,
            rule.positive_class,
            rule.default_class,
        )?;
        Ok(DecisionSystem { scorer, rule })
    }

    /// Number of decision classes; only binary rules are supported.
    pub fn k(&self) -> usize {
        2
    }

    pub fn n_features(&self) -> usize {
        self.scorer.n_features()
    }

    pub fn score(&self, instance: &Instance) -> Result<f64> {
        self.scorer.score(instance)
    }

    pub fn decide(&self, instance: &Instance) -> Result<Decision> {
        Ok(self.rule.apply(self.scorer.score(instance)?))
    }

    pub fn is_default(&self, decision: Decision) -> bool {
        decision == self.rule.default_class
    }

    /// +1 when `decision` is the positive class, -1 otherwise: the sign that
    /// turns the raw score into the score of the decided class.
    pub fn orientation(&self, decision: Decision) -> f64 {
        if decision == self.rule.positive_class {
            1.0
        } else {
            -1.0
        }
    }
}

/// `I'(E)`: `instance` with the features in `set` replaced by the policy's
/// counterfactual values. Substitution is simultaneous: model-based rules
/// always read the observed values of the other features.
pub fn apply_counterfactual(
    instance: &Instance,
    set: &FeatureSet,
    policy: &CounterfactualPolicy,
) -> Result<Instance> {
    set.check_bounds(instance.len())?;
    let mut out = instance.clone();
    for j in set.iter() {
        out.values_mut()[j] = policy.counterfactual_value(instance, j)?;
    }
    Ok(out)
}

pub fn decide<S: Scorer>(system: &DecisionSystem<S>, instance: &Instance) -> Result<Decision> {
    system.decide(instance)
}

pub fn is_causal<S: Scorer>(
    system: &DecisionSystem<S>,
    instance: &Instance,
    set: &FeatureSet,
    policy: &CounterfactualPolicy,
) -> Result<bool> {
    let original = system.decide(instance)?;
    let removed = apply_counterfactual(instance, set, policy)?;
    Ok(system.decide(&removed)? != original)
}

/// Causal and irreducible, checked by scanning every proper subset.
pub fn is_explanation<S: Scorer>(
    system: &DecisionSystem<S>,
    instance: &Instance,
    set: &FeatureSet,
    policy: &CounterfactualPolicy,
    power_set_bound: usize,
) -> Result<bool> {
    if set.len() > power_set_bound {
        return Err(Error::IrreducibilityInfeasible {
            size: set.len(),
            bound: power_set_bound,
        });
    }
    set.check_bounds(instance.len())?;
    if !is_causal(system, instance, set, policy)? {
        return Ok(false);
    }
    let members = set.indices();
    let full: u32 = (1u32 << members.len()) - 1;
    for mask in 1..full {
        let subset: FeatureSet = members
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &j)| j)
            .collect();
        if is_causal(system, instance, &subset, policy)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Evaluates decisions of `I'(E)` for many sets `E` against one instance.
///
/// Counterfactual values are resolved once up front and scores are
/// maintained by the scorer's incremental evaluator. Scores that land within
/// a hair of the threshold are recomputed exactly so the decision agrees
/// with [`is_causal`].
pub struct EvidenceProbe<'a, S> {
    system: &'a DecisionSystem<S>,
    instance: &'a Instance,
    counterfactual: Vec<f64>,
    evaluator: Box<dyn Evaluator + 'a>,
    original_score: f64,
    original_decision: Decision,
}

impl<'a, S: Scorer> EvidenceProbe<'a, S> {
    pub fn new(
        system: &'a DecisionSystem<S>,
        instance: &'a Instance,
        policy: &CounterfactualPolicy,
    ) -> Result<Self> {
        let original_score = system.score(instance)?;
        let counterfactual = policy.counterfactual_values(instance)?;
        Ok(EvidenceProbe {
            system,
            instance,
            counterfactual,
            evaluator: system.scorer.evaluator(instance),
            original_score,
            original_decision: system.rule.apply(original_score),
        })
    }

    pub fn system(&self) -> &DecisionSystem<S> {
        self.system
    }

    pub fn instance(&self) -> &Instance {
        self.instance
    }

    pub fn counterfactual(&self) -> &[f64] {
        &self.counterfactual
    }

    pub fn original_score(&self) -> f64 {
        self.original_score
    }

    pub fn original_decision(&self) -> Decision {
        self.original_decision
    }

    /// Features whose observed value differs from their counterfactual.
    pub fn candidates(&self) -> Vec<usize> {
        self.instance
            .values()
            .iter()
            .zip(&self.counterfactual)
            .enumerate()
            .filter(|(_, (observed, cf))| observed != cf)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn removed_instance(&self, set: &FeatureSet) -> Instance {
        let mut values = self.instance.values().to_vec();
        for j in set.iter() {
            values[j] = self.counterfactual[j];
        }
        Instance::new(values)
    }

    /// Fast score of `I'(set)`.
    pub fn score_without(&mut self, set: &FeatureSet) -> f64 {
        for j in set.iter() {
            self.evaluator.set(j, self.counterfactual[j]);
        }
        let score = self.evaluator.score();
        self.evaluator.reset();
        score
    }

    /// Score of `I'(set)` recomputed from scratch.
    pub fn exact_score_without(&self, set: &FeatureSet) -> f64 {
        self.system
            .scorer
            .score_values(self.removed_instance(set).values())
    }

    /// Fast score plus the decision it implies, with exact rescoring near
    /// the threshold.
    pub fn evaluate(&mut self, set: &FeatureSet) -> (f64, Decision) {
        let mut score = self.score_without(set);
        if self.system.rule.near_boundary(score) {
            score = self.exact_score_without(set);
        }
        (score, self.system.rule.apply(score))
    }

    pub fn decision_without(&mut self, set: &FeatureSet) -> Decision {
        self.evaluate(set).1
    }

    pub fn is_causal(&mut self, set: &FeatureSet) -> bool {
        self.decision_without(set) != self.original_decision
    }
}
