//! Best-first search for counterfactual explanations, the reducers that
//! make a causal set irreducible, and an exhaustive oracle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::decision::{Decision, DecisionSystem, EvidenceProbe, Scorer, DEFAULT_POWER_SET_BOUND};
use crate::error::{Error, Result};
use crate::imputation::CounterfactualPolicy;
use crate::schema::{FeatureSchema, FeatureSet, Instance};

/// Largest candidate pool the oracle will enumerate.
pub const ORACLE_CANDIDATE_LIMIT: usize = 20;

/// Additive per-feature costs; `f64::INFINITY` marks a feature that should
/// only be used as a last resort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    costs: Vec<f64>,
}

impl CostFunction {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if let Some(c) = costs.iter().find(|c| c.is_nan() || **c < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "feature costs must be >= 0, got {c}"
            )));
        }
        Ok(CostFunction { costs })
    }

    pub fn uniform(m: usize) -> Self {
        CostFunction {
            costs: vec![1.0; m],
        }
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cost(&self, set: &FeatureSet) -> f64 {
        set.iter().map(|j| self.costs[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOrdering {
    /// Lowest score of the original decision's class first.
    ScoreAscending,
    /// Largest score change per unit of cost first. Zero-cost sets come
    /// before everything else and infinite-cost sets after; both groups
    /// are ordered by score.
    ScorePerCostDescending(CostFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Number of frontier pops before giving up.
    pub max_iteration: usize,
    pub ordering: SearchOrdering,
    /// Largest causal set reduced by a full subset scan; larger ones are
    /// reduced greedily.
    pub power_set_bound: usize,
    /// Features never added to a combination.
    pub exclude: FeatureSet,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iteration: 30,
            ordering: SearchOrdering::ScoreAscending,
            power_set_bound: DEFAULT_POWER_SET_BOUND,
            exclude: FeatureSet::empty(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.max_iteration == 0 {
            return Err(Error::InvalidArgument("max_iteration must be >= 1".into()));
        }
        if self.power_set_bound == 0 {
            return Err(Error::InvalidArgument(
                "power_set_bound must be >= 1".into(),
            ));
        }
        self.exclude.check_bounds(m)?;
        if let SearchOrdering::ScorePerCostDescending(cost) = &self.ordering {
            if cost.costs().len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    actual: cost.costs().len(),
                });
            }
        }
        Ok(())
    }
}

/// How irreducibility of an explanation was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Smallest causal subset by a scan of all subsets.
    Full,
    /// Greedy single-feature drops; the result is only 1-minimal.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub feature: usize,
    pub observed: f64,
    pub counterfactual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub set: FeatureSet,
    pub original_decision: Decision,
    pub counterfactual_decision: Decision,
    pub score_before: f64,
    pub score_after: f64,
    /// Under the search's cost function, or the set size when none is used.
    pub cost: f64,
    pub substituted: Vec<Substitution>,
    pub reduction: Reduction,
}

/// Serialized form of an [`Explanation`] with feature names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub features: Vec<String>,
    pub observed: serde_json::Map<String, serde_json::Value>,
    pub counterfactual: serde_json::Map<String, serde_json::Value>,
    pub score_before: f64,
    pub score_after: f64,
    pub decision_before: Decision,
    pub decision_after: Decision,
    pub cost: f64,
    pub reduction: Reduction,
}

impl Explanation {
    pub fn to_document(&self, schema: &FeatureSchema) -> ExplanationDocument {
        let mut observed = serde_json::Map::new();
        let mut counterfactual = serde_json::Map::new();
        for s in &self.substituted {
            let name = schema.name(s.feature).to_owned();
            observed.insert(name.clone(), schema.render_value(s.feature, s.observed));
            counterfactual.insert(name, schema.render_value(s.feature, s.counterfactual));
        }
        ExplanationDocument {
            features: schema.set_names(&self.set),
            observed,
            counterfactual,
            score_before: self.score_before,
            score_after: self.score_after,
            decision_before: self.original_decision,
            decision_after: self.counterfactual_decision,
            cost: self.cost,
            reduction: self.reduction,
        }
    }
}

/// Result of a search together with its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Antichain in discovery order.
    pub explanations: Vec<Explanation>,
    /// Combinations in the order they were popped.
    pub popped: Vec<FeatureSet>,
    /// True when the frontier emptied before the iteration limit.
    pub exhausted: bool,
}

struct Entry {
    tier: u8,
    key: f64,
    set: FeatureSet,
}

impl Entry {
    /// Total order where the preferred entry compares greatest.
    fn rank(&self, other: &Self) -> Ordering {
        other
            .tier
            .cmp(&self.tier)
            .then_with(|| other.key.total_cmp(&self.key))
            .then_with(|| other.set.len().cmp(&self.set.len()))
            .then_with(|| other.set.indices().cmp(self.set.indices()))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank(other)
    }
}

fn canonical(key: f64) -> f64 {
    if key == 0.0 {
        0.0
    } else {
        key
    }
}

/// Evidence-based explainer: best-first search over feature combinations.
pub fn ebe_search<S: Scorer>(
    system: &DecisionSystem<S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    config: &SearchConfig,
) -> Result<Vec<Explanation>> {
    Ok(ebe_search_traced(system, instance, policy, config)?.explanations)
}

pub fn ebe_search_traced<S: Scorer>(
    system: &DecisionSystem<S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    config.validate(instance.len())?;
    let mut probe = EvidenceProbe::new(system, instance, policy)?;
    let orientation = system.orientation(probe.original_decision());
    let start = orientation * probe.original_score();
    let expandable: Vec<usize> = probe
        .candidates()
        .into_iter()
        .filter(|&j| !config.exclude.contains(j))
        .collect();

    let entry = |set: FeatureSet, score: f64| {
        let oriented = orientation * score;
        let (tier, key) = match &config.ordering {
            SearchOrdering::ScoreAscending => (0, oriented),
            SearchOrdering::ScorePerCostDescending(cost) => {
                let c = cost.cost(&set);
                if c == 0.0 {
                    (0, oriented)
                } else if c.is_finite() {
                    (1, -(start - oriented) / c)
                } else {
                    (2, oriented)
                }
            }
        };
        Entry {
            tier,
            key: canonical(key),
            set,
        }
    };

    let mut frontier = BinaryHeap::new();
    let mut visited: HashSet<FeatureSet> = HashSet::new();
    visited.insert(FeatureSet::empty());
    frontier.push(entry(FeatureSet::empty(), probe.original_score()));

    let mut explanations: Vec<Explanation> = Vec::new();
    let mut popped = Vec::new();
    while popped.len() < config.max_iteration {
        let Some(Entry { set, .. }) = frontier.pop() else {
            break;
        };
        popped.push(set.clone());
        if explanations.iter().any(|e| e.set.is_subset_of(&set)) {
            continue;
        }
        if !probe.is_causal(&set) {
            for &j in &expandable {
                if set.contains(j) {
                    continue;
                }
                let grown = set.with(j);
                if visited.contains(&grown)
                    || explanations.iter().any(|e| e.set.is_subset_of(&grown))
                {
                    continue;
                }
                let (score, _) = probe.evaluate(&grown);
                visited.insert(grown.clone());
                frontier.push(entry(grown, score));
            }
        } else {
            let (reduced, reduction) = reduce_with_probe(&mut probe, &set, config.power_set_bound);
            let cost = match &config.ordering {
                SearchOrdering::ScorePerCostDescending(c) => c.cost(&reduced),
                SearchOrdering::ScoreAscending => reduced.len() as f64,
            };
            if explanations.iter().any(|e| e.set == reduced) {
                continue;
            }
            explanations.retain(|e| !reduced.is_proper_subset_of(&e.set));
            explanations.push(explain(&mut probe, reduced, reduction, cost));
        }
    }
    let exhausted = frontier.is_empty();
    Ok(SearchOutcome {
        explanations,
        popped,
        exhausted,
    })
}

fn explain<S: Scorer>(
    probe: &mut EvidenceProbe<'_, S>,
    set: FeatureSet,
    reduction: Reduction,
    cost: f64,
) -> Explanation {
    let score_after = probe.exact_score_without(&set);
    let substituted = set
        .iter()
        .map(|j| Substitution {
            feature: j,
            observed: probe.instance().values()[j],
            counterfactual: probe.counterfactual()[j],
        })
        .collect();
    Explanation {
        original_decision: probe.original_decision(),
        counterfactual_decision: probe.system().rule.apply(score_after),
        score_before: probe.original_score(),
        score_after,
        cost,
        substituted,
        reduction,
        set,
    }
}

/// Calls `visit` with every `k`-subset of `items` in lexicographic order
/// until it returns true; returns that subset.
fn first_combination<F: FnMut(&FeatureSet) -> bool>(
    items: &[usize],
    k: usize,
    mut visit: F,
) -> Option<FeatureSet> {
    let n = items.len();
    if k > n {
        return None;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let set: FeatureSet = idx.iter().map(|&i| items[i]).collect();
        if visit(&set) {
            return Some(set);
        }
        let pos = (0..k).rev().find(|&p| idx[p] != p + n - k)?;
        idx[pos] += 1;
        for q in pos + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn reduce_with_probe<S: Scorer>(
    probe: &mut EvidenceProbe<'_, S>,
    set: &FeatureSet,
    bound: usize,
) -> (FeatureSet, Reduction) {
    if set.len() <= bound {
        for k in 1..set.len() {
            if let Some(found) = first_combination(set.indices(), k, |s| probe.is_causal(s)) {
                return (found, Reduction::Full);
            }
        }
        (set.clone(), Reduction::Full)
    } else {
        let mut current = set.clone();
        for j in set.iter() {
            let dropped = current.without(j);
            if probe.is_causal(&dropped) {
                current = dropped;
            }
        }
        (current, Reduction::Greedy)
    }
}

/// Shrinks a causal set to an irreducible one: the first smallest causal
/// subset (by size, then lexicographically) when `|set| <= bound`,
/// otherwise a greedy pass dropping features in ascending order.
pub fn reduce_to_irreducible<S: Scorer>(
    system: &DecisionSystem<S>,
    instance: &Instance,
    causal_set: &FeatureSet,
    policy: &CounterfactualPolicy,
    bound: usize,
) -> Result<(FeatureSet, Reduction)> {
    causal_set.check_bounds(instance.len())?;
    let mut probe = EvidenceProbe::new(system, instance, policy)?;
    if !probe.is_causal(causal_set) {
        return Err(Error::NotCausal);
    }
    Ok(reduce_with_probe(&mut probe, causal_set, bound))
}

/// Every explanation with at most `max_size` features, by exhaustive
/// enumeration of subsets of the candidate features (those whose observed
/// value differs from the counterfactual, minus `exclude`). Sorted by size,
/// then lexicographically.
pub fn oracle_all_explanations<S: Scorer>(
    system: &DecisionSystem<S>,
    instance: &Instance,
    policy: &CounterfactualPolicy,
    max_size: usize,
    exclude: &FeatureSet,
) -> Result<Vec<Explanation>> {
    exclude.check_bounds(instance.len())?;
    let mut probe = EvidenceProbe::new(system, instance, policy)?;
    let candidates: Vec<usize> = probe
        .candidates()
        .into_iter()
        .filter(|&j| !exclude.contains(j))
        .collect();
    if candidates.len() > ORACLE_CANDIDATE_LIMIT {
        return Err(Error::OracleInfeasible {
            candidates: candidates.len(),
            limit: ORACLE_CANDIDATE_LIMIT,
        });
    }
    let mut found: Vec<FeatureSet> = Vec::new();
    for k in 1..=max_size.min(candidates.len()) {
        let before = found.len();
        first_combination(&candidates, k, |s| {
            if !found[..before].iter().any(|e| e.is_subset_of(s)) && probe.is_causal(s) {
                found.push(s.clone());
            }
            false
        });
    }
    Ok(found
        .into_iter()
        .map(|set| {
            let cost = set.len() as f64;
            explain(&mut probe, set, Reduction::Full, cost)
        })
        .collect())
}
