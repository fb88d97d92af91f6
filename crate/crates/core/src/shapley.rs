//! Shapley attributions over joining orders, exact and sampled.
//!
//! The value of a coalition is the target evaluated on the instance where
//! coalition members hold their observed values, the remaining active
//! features hold their counterfactual values, and inactive features keep
//! their observed values throughout.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decision::{Decision, DecisionSystem, Evaluator, Scorer};
use crate::error::{Error, Result};
use crate::imputation::CounterfactualPolicy;
use crate::schema::{FeatureSchema, FeatureSet, Instance};

/// Most active features exact enumeration accepts.
pub const EXACT_ACTIVE_BOUND: usize = 10;

/// Most active features for which sampling escalates to enumeration.
pub const ESCALATION_BOUND: usize = 7;

/// What is being attributed.
pub enum AttributionTarget<'a, S> {
    /// The raw score.
    Score(&'a S),
    /// 1 while the decision equals the instance's original decision, else 0.
    DecisionIndicator(&'a DecisionSystem<S>),
}

impl<S> Clone for AttributionTarget<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for AttributionTarget<'_, S> {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Score,
    DecisionIndicator,
}

impl<'a, S: Scorer> AttributionTarget<'a, S> {
    pub fn kind(&self) -> TargetKind {
        match self {
            AttributionTarget::Score(_) => TargetKind::Score,
            AttributionTarget::DecisionIndicator(_) => TargetKind::DecisionIndicator,
        }
    }

    fn scorer(&self) -> &'a S {
        match *self {
            AttributionTarget::Score(s) => s,
            AttributionTarget::DecisionIndicator(system) => &system.scorer,
        }
    }
}

/// Evaluates the target on patched copies of one instance.
struct Valuer<'a, S> {
    target: AttributionTarget<'a, S>,
    original: Option<Decision>,
}

impl<'a, S: Scorer> Valuer<'a, S> {
    fn new(target: AttributionTarget<'a, S>, instance: &Instance) -> Result<Self> {
        let original = match target {
            AttributionTarget::Score(s) => {
                s.score(instance)?;
                None
            }
            AttributionTarget::DecisionIndicator(system) => Some(system.decide(instance)?),
        };
        Ok(Valuer { target, original })
    }

    fn value_of_values(&self, values: &[f64]) -> f64 {
        let score = self.target.scorer().score_values(values);
        self.indicator(score)
    }

    fn indicator(&self, score: f64) -> f64 {
        match (self.target, self.original) {
            (AttributionTarget::DecisionIndicator(system), Some(original)) => {
                f64::from(u8::from(system.rule.apply(score) == original))
            }
            _ => score,
        }
    }

    /// Value from an incremental evaluator, rescoring exactly near the
    /// decision threshold.
    fn value_of_evaluator(&self, evaluator: &mut dyn Evaluator) -> f64 {
        let mut score = evaluator.score();
        if let AttributionTarget::DecisionIndicator(system) = self.target {
            if system.rule.near_boundary(score) {
                score = system.scorer.score_values(evaluator.values());
            }
        }
        self.indicator(score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapleyMethod {
    Exact,
    Sampled {
        samples: usize,
        seed: u64,
    },
    /// Sampling was requested with at least as many samples as joining
    /// orders, so every order was enumerated instead.
    ExactEscalated {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    /// Active feature indices, ascending.
    pub features: Vec<usize>,
    /// Attribution of each entry of `features`.
    pub values: Vec<f64>,
    pub method: ShapleyMethod,
    pub target: TargetKind,
    /// Target with every active feature at its counterfactual value.
    pub baseline: f64,
    /// Target at the instance.
    pub full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureValue {
    pub feature: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyDocument {
    pub method: ShapleyMethod,
    pub target: TargetKind,
    pub baseline: f64,
    pub full: f64,
    pub values: Vec<FeatureValue>,
}

impl ShapleyReport {
    /// Attribution of `feature`; 0 for inactive features.
    pub fn value_of(&self, feature: usize) -> f64 {
        self.features
            .binary_search(&feature)
            .map_or(0.0, |i| self.values[i])
    }

    /// The `k` features with the largest attributions, ties going to the
    /// smaller index.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .total_cmp(&self.values[a])
                .then(self.features[a].cmp(&self.features[b]))
        });
        order
            .into_iter()
            .take(k)
            .map(|i| self.features[i])
            .collect()
    }

    pub fn to_document(&self, schema: &FeatureSchema) -> ShapleyDocument {
        ShapleyDocument {
            method: self.method,
            target: self.target,
            baseline: self.baseline,
            full: self.full,
            values: self
                .features
                .iter()
                .zip(&self.values)
                .map(|(&j, &value)| FeatureValue {
                    feature: schema.name(j).to_owned(),
                    value,
                })
                .collect(),
        }
    }
}

/// Features whose observed value differs from the counterfactual one.
pub fn active_features(instance: &Instance, policy: &CounterfactualPolicy) -> Result<FeatureSet> {
    let cf = policy.counterfactual_values(instance)?;
    Ok(instance
        .values()
        .iter()
        .zip(&cf)
        .enumerate()
        .filter(|(_, (o, c))| o != c)
        .map(|(j, _)| j)
        .collect())
}

struct Setup {
    active: Vec<usize>,
    observed: Vec<f64>,
    baseline_values: Vec<f64>,
}

fn setup(instance: &Instance, policy: &CounterfactualPolicy, active: &FeatureSet) -> Result<Setup> {
    active.check_bounds(instance.len())?;
    let cf = policy.counterfactual_values(instance)?;
    let mut baseline_values = instance.values().to_vec();
    for j in active.iter() {
        baseline_values[j] = cf[j];
    }
    Ok(Setup {
        active: active.indices().to_vec(),
        observed: instance.values().to_vec(),
        baseline_values,
    })
}

/// Target value of every coalition, indexed by bitmask over `active`.
fn coalition_table<S: Scorer>(valuer: &Valuer<'_, S>, s: &Setup) -> Vec<f64> {
    let n = s.active.len();
    let mut values = s.baseline_values.clone();
    (0..1usize << n)
        .map(|mask| {
            for (bit, &j) in s.active.iter().enumerate() {
                values[j] = if mask & (1 << bit) != 0 {
                    s.observed[j]
                } else {
                    s.baseline_values[j]
                };
            }
            valuer.value_of_values(&values)
        })
        .collect()
}

/// Advances to the next permutation in lexicographic order.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// One row per joining order, in lexicographic order of the orders: the
/// order (as feature indices) and each active feature's marginal impact.
pub fn joining_order_impacts<S: Scorer>(
    target: AttributionTarget<'_, S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    active: &FeatureSet,
) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    check_exact(active)?;
    let valuer = Valuer::new(target, instance)?;
    let s = setup(instance, policy, active)?;
    let table = coalition_table(&valuer, &s);
    let mut order: Vec<usize> = (0..s.active.len()).collect();
    let mut rows = Vec::new();
    loop {
        let mut impacts = vec![0.0; order.len()];
        let mut mask = 0usize;
        for &pos in &order {
            let next = mask | (1 << pos);
            impacts[pos] = table[next] - table[mask];
            mask = next;
        }
        rows.push((order.iter().map(|&p| s.active[p]).collect(), impacts));
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(rows)
}

fn check_exact(active: &FeatureSet) -> Result<()> {
    if active.len() > EXACT_ACTIVE_BOUND {
        return Err(Error::ShapleyInfeasible {
            active: active.len(),
            bound: EXACT_ACTIVE_BOUND,
        });
    }
    Ok(())
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Mean marginal impact over all joining orders of `active`.
pub fn shapley_exact<S: Scorer>(
    target: AttributionTarget<'_, S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    active: &FeatureSet,
) -> Result<ShapleyReport> {
    exact_with_method(target, instance, policy, active, ShapleyMethod::Exact)
}

fn exact_with_method<S: Scorer>(
    target: AttributionTarget<'_, S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    active: &FeatureSet,
    method: ShapleyMethod,
) -> Result<ShapleyReport> {
    let rows = joining_order_impacts(target, instance, policy, active)?;
    let n = active.len();
    let mut sums = vec![0.0; n];
    for (_, impacts) in &rows {
        for (s, v) in sums.iter_mut().zip(impacts) {
            *s += v;
        }
    }
    let count = rows.len() as f64;
    let valuer = Valuer::new(target, instance)?;
    let s = setup(instance, policy, active)?;
    Ok(ShapleyReport {
        features: active.indices().to_vec(),
        values: sums.into_iter().map(|v| v / count).collect(),
        method,
        target: target.kind(),
        baseline: valuer.value_of_values(&s.baseline_values),
        full: valuer.value_of_values(&s.observed),
    })
}

/// Mean marginal impact over `samples` uniformly drawn joining orders.
/// Enumerates every order instead when `samples >= |active|!` and
/// `|active| <= 7`.
pub fn shapley_sampled<S: Scorer>(
    target: AttributionTarget<'_, S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    active: &FeatureSet,
    samples: usize,
    seed: u64,
) -> Result<ShapleyReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let n = active.len();
    if n <= ESCALATION_BOUND && samples >= factorial(n) {
        let method = ShapleyMethod::ExactEscalated { samples, seed };
        return exact_with_method(target, instance, policy, active, method);
    }
    shapley_permutation_sample(target, instance, policy, active, samples, seed)
}

/// The sampler behind [`shapley_sampled`] without the switch to
/// enumeration.
pub fn shapley_permutation_sample<S: Scorer>(
    target: AttributionTarget<'_, S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    active: &FeatureSet,
    samples: usize,
    seed: u64,
) -> Result<ShapleyReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let n = active.len();
    let valuer = Valuer::new(target, instance)?;
    let s = setup(instance, policy, active)?;
    let scorer = target.scorer();
    let mut evaluator = scorer.evaluator(&Instance::new(s.baseline_values.clone()));
    let baseline = valuer.value_of_evaluator(evaluator.as_mut());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sums = vec![0.0; n];
    for _ in 0..samples {
        order.shuffle(&mut rng);
        let mut previous = baseline;
        for &pos in &order {
            let j = s.active[pos];
            evaluator.set(j, s.observed[j]);
            let current = valuer.value_of_evaluator(evaluator.as_mut());
            sums[pos] += current - previous;
            previous = current;
        }
        evaluator.reset();
    }
    Ok(ShapleyReport {
        features: s.active.clone(),
        values: sums.into_iter().map(|v| v / samples as f64).collect(),
        method: ShapleyMethod::Sampled { samples, seed },
        target: target.kind(),
        baseline,
        full: valuer.value_of_values(&s.observed),
    })
}

/// Size of the intersection of every report's top-`k` feature set.
pub fn topk_matches(reports: &[ShapleyReport], k: usize) -> Result<usize> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument(
            "top-k matching needs at least 2 reports".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let features = &reports[0].features;
    if reports.iter().any(|r| &r.features != features) {
        return Err(Error::InvalidArgument(
            "reports cover different feature sets".into(),
        ));
    }
    let mut common: FeatureSet = reports[0].top_k(k).into_iter().collect();
    for r in &reports[1..] {
        let top: FeatureSet = r.top_k(k).into_iter().collect();
        common = common.iter().filter(|&j| top.contains(j)).collect();
    }
    Ok(common.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::synthetic;

    fn ones() -> Instance {
        Instance::new(vec![1.0; 3])
    }

    fn all3() -> FeatureSet {
        FeatureSet::full(3)
    }

    #[test]
    fn permutations_are_lexicographic() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(
            seen,
            vec![
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0]
            ]
        );
    }

    #[test]
    fn score_shapley_of_example_one() {
        let f = synthetic::example(1);
        let p = CounterfactualPolicy::zero(3);
        let r = shapley_exact(AttributionTarget::Score(&f), &ones(), &p, &all3()).unwrap();
        assert_eq!(r.values, vec![6.0, 6.0, 10.0]);
        assert_eq!((r.baseline, r.full), (0.0, 22.0));
    }

    #[test]
    fn decision_shapley_of_the_worked_examples() {
        let p = CounterfactualPolicy::zero(3);
        for id in 1..=3 {
            let system = synthetic::system(id);
            let r = shapley_exact(
                AttributionTarget::DecisionIndicator(&system),
                &ones(),
                &p,
                &all3(),
            )
            .unwrap();
            assert_eq!(r.values, vec![0.5, 0.5, 0.0], "example {id}");
        }
    }

    #[test]
    fn impact_rows_of_example_one() {
        let f = synthetic::example(1);
        let p = CounterfactualPolicy::zero(3);
        let rows =
            joining_order_impacts(AttributionTarget::Score(&f), &ones(), &p, &all3()).unwrap();
        let impacts: Vec<Vec<f64>> = rows.into_iter().map(|(_, v)| v).collect();
        assert_eq!(
            impacts,
            vec![
                vec![1.0, 1.0, 20.0],
                vec![1.0, 11.0, 10.0],
                vec![1.0, 1.0, 20.0],
                vec![11.0, 1.0, 10.0],
                vec![11.0, 11.0, 0.0],
                vec![11.0, 11.0, 0.0],
            ]
        );
    }

    #[test]
    fn escalation_matches_exact_bitwise() {
        let system = synthetic::system(3);
        let p = CounterfactualPolicy::zero(3);
        let t = AttributionTarget::DecisionIndicator(&system);
        let exact = shapley_exact(t, &ones(), &p, &all3()).unwrap();
        let sampled = shapley_sampled(t, &ones(), &p, &all3(), 6, 9).unwrap();
        assert_eq!(sampled.values, exact.values);
        assert_eq!(
            sampled.method,
            ShapleyMethod::ExactEscalated {
                samples: 6,
                seed: 9
            }
        );
        let rough = shapley_sampled(t, &ones(), &p, &all3(), 5, 9).unwrap();
        assert_eq!(
            rough.method,
            ShapleyMethod::Sampled {
                samples: 5,
                seed: 9
            }
        );
    }

    #[test]
    fn exact_bound_is_enforced() {
        let m = EXACT_ACTIVE_BOUND + 1;
        let f = crate::models::ScoringFunction::linear(vec![1.0; m], 0.0);
        let r = shapley_exact(
            AttributionTarget::Score(&f),
            &Instance::new(vec![1.0; m]),
            &CounterfactualPolicy::zero(m),
            &FeatureSet::full(m),
        );
        assert!(matches!(
            r,
            Err(Error::ShapleyInfeasible {
                active: 11,
                bound: 10
            })
        ));
    }

    #[test]
    fn sampled_is_seed_deterministic() {
        let f = synthetic::example(1);
        let p = CounterfactualPolicy::zero(3);
        let t = AttributionTarget::Score(&f);
        let a = shapley_sampled(t, &ones(), &p, &all3(), 4, 11).unwrap();
        let b = shapley_sampled(t, &ones(), &p, &all3(), 4, 11).unwrap();
        assert_eq!(a, b);
        let sum: f64 = a.values.iter().sum();
        assert!((sum - 22.0).abs() < 1e-12);
    }

    fn report(values: Vec<f64>) -> ShapleyReport {
        ShapleyReport {
            features: (0..values.len()).collect(),
            values,
            method: ShapleyMethod::Exact,
            target: TargetKind::Score,
            baseline: 0.0,
            full: 0.0,
        }
    }

    #[test]
    fn top_k_matching() {
        let a = report(vec![3.0, 2.0, 1.0, 0.0, 0.0, 0.0]);
        let b = report(vec![0.0, 0.0, 0.0, 3.0, 2.0, 1.0]);
        assert_eq!(topk_matches(&[a.clone(), a.clone()], 3).unwrap(), 3);
        assert_eq!(topk_matches(&[a.clone(), b], 3).unwrap(), 0);
        assert_eq!(report(vec![1.0, 1.0, 1.0, 1.0]).top_k(2), vec![0, 1]);
        assert!(topk_matches(std::slice::from_ref(&a), 3).is_err());
        assert!(topk_matches(&[a, report(vec![1.0])], 1).is_err());
    }
}
