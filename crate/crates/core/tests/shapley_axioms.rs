mod common;

use cfx_core::models::Monomial;
use cfx_core::shapley::active_features;
use cfx_core::{
    shapley_exact, AttributionTarget, CounterfactualPolicy, DecisionRule, DecisionSystem,
    FeatureSet, Instance, ScoringFunction,
};
use common::{eval, mask_indices, random_polynomial, substitute};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weighted-subset form: sum over coalitions S not containing j of
/// |S|! (n - |S| - 1)! / n! times the marginal gain of j.
fn subset_formula(value: impl Fn(u32) -> f64, players: &[usize], j: usize) -> f64 {
    let n = players.len();
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let others: Vec<usize> = players.iter().copied().filter(|&p| p != j).collect();
    let mut total = 0.0;
    for bits in 0..1u32 << others.len() {
        let s: u32 = mask_indices(bits)
            .iter()
            .fold(0, |acc, &b| acc | (1 << others[b]));
        let size = bits.count_ones() as usize;
        let weight = fact(size) * fact(n - size - 1) / fact(n);
        total += weight * (value(s | (1 << j)) - value(s));
    }
    total
}

struct Case {
    terms: Vec<Monomial>,
    values: Vec<f64>,
    counterfactual: Vec<f64>,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let m = rng.random_range(1..=6);
    let mut terms = random_polynomial(m, rng);
    for t in &mut terms {
        t.coefficient *= rng.random_range(0.25..2.0);
    }
    let values = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let counterfactual = (0..m)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    Case {
        terms,
        values,
        counterfactual,
    }
}

#[test]
fn exact_values_satisfy_the_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1200 {
        let Case {
            terms,
            mut values,
            counterfactual,
        } = random_case(&mut rng);
        let m = values.len();
        // Some features sit at their counterfactual value and are inactive.
        if m > 1 && case % 3 == 0 {
            values[0] = counterfactual[0];
        }
        let scorer = ScoringFunction::polynomial(m, terms.clone()).unwrap();
        let instance = Instance::new(values.clone());
        let policy = CounterfactualPolicy::fixed(&counterfactual);
        let active = active_features(&instance, &policy).unwrap();
        let report = shapley_exact(
            AttributionTarget::Score(&scorer),
            &instance,
            &policy,
            &active,
        )
        .unwrap();

        let full_mask: u32 = active.iter().fold(0, |acc, j| acc | (1 << j));
        let value = |mask: u32| {
            // Features outside `mask` take their counterfactual value.
            eval(
                &terms,
                &substitute(&values, &counterfactual, !mask & ((1 << m) - 1)),
            )
        };
        let sum: f64 = report.values.iter().sum();
        assert!(
            (sum - (value(full_mask) - value(0))).abs() <= 1e-9,
            "efficiency, case {case}"
        );
        for (&j, &v) in report.features.iter().zip(&report.values) {
            let expected = subset_formula(value, active.indices(), j);
            assert!(
                (v - expected).abs() <= 1e-9,
                "case {case}: {v} vs {expected}"
            );
        }
        for j in 0..m {
            if !active.contains(j) {
                assert_eq!(report.value_of(j), 0.0);
            }
        }
    }
}

#[test]
fn dummy_features_get_exactly_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let Case {
            terms,
            values,
            counterfactual,
        } = random_case(&mut rng);
        let m = values.len() + 1;
        let dummy = m - 1;
        let scorer = ScoringFunction::polynomial(m, terms).unwrap();
        let mut values = values;
        values.push(1.0);
        let mut counterfactual = counterfactual;
        counterfactual.push(0.0);
        let instance = Instance::new(values);
        let policy = CounterfactualPolicy::fixed(&counterfactual);
        let active = active_features(&instance, &policy).unwrap();
        assert!(active.contains(dummy));
        let system = DecisionSystem::new(scorer.clone(), DecisionRule::at_least(0.5)).unwrap();
        let score = shapley_exact(
            AttributionTarget::Score(&scorer),
            &instance,
            &policy,
            &active,
        )
        .unwrap();
        let decision = shapley_exact(
            AttributionTarget::DecisionIndicator(&system),
            &instance,
            &policy,
            &active,
        )
        .unwrap();
        assert_eq!(score.value_of(dummy), 0.0);
        assert_eq!(decision.value_of(dummy), 0.0);
    }
}

/// A polynomial invariant under swapping features `a` and `b`.
fn symmetrized(terms: Vec<Monomial>, a: usize, b: usize) -> Vec<Monomial> {
    let swap = |j: usize| match j {
        j if j == a => b,
        j if j == b => a,
        j => j,
    };
    let mirrored: Vec<Monomial> = terms
        .iter()
        .map(|t| {
            Monomial::new(
                t.coefficient,
                t.factors.iter().map(|&j| swap(j)).collect::<Vec<_>>(),
            )
        })
        .collect();
    terms.into_iter().chain(mirrored).collect()
}

#[test]
fn symmetric_features_get_equal_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 1000 {
        let Case {
            terms,
            mut values,
            mut counterfactual,
        } = random_case(&mut rng);
        let m = values.len();
        if m < 2 {
            continue;
        }
        let (a, b) = (0, m - 1);
        values[b] = values[a];
        counterfactual[b] = counterfactual[a];
        let scorer = ScoringFunction::polynomial(m, symmetrized(terms, a, b)).unwrap();
        let system = DecisionSystem::new(scorer.clone(), DecisionRule::at_least(0.0)).unwrap();
        let instance = Instance::new(values);
        let policy = CounterfactualPolicy::fixed(&counterfactual);
        let active = active_features(&instance, &policy).unwrap();
        for target in [
            AttributionTarget::Score(&scorer),
            AttributionTarget::DecisionIndicator(&system),
        ] {
            let r = shapley_exact(target, &instance, &policy, &active).unwrap();
            assert!((r.value_of(a) - r.value_of(b)).abs() <= 1e-9);
        }
        checked += 1;
    }
}

proptest! {
    #[test]
    fn decision_indicator_efficiency(
        weights in prop::collection::vec(-3.0f64..3.0, 1..=6),
        threshold in -2.0f64..2.0,
    ) {
        let m = weights.len();
        let scorer = ScoringFunction::linear(weights, 0.0);
        let system = DecisionSystem::new(scorer, DecisionRule::at_least(threshold)).unwrap();
        let instance = Instance::new(vec![1.0; m]);
        let policy = CounterfactualPolicy::zero(m);
        let active = FeatureSet::full(m);
        let r = shapley_exact(AttributionTarget::DecisionIndicator(&system), &instance, &policy, &active)
            .unwrap();
        let sum: f64 = r.values.iter().sum();
        prop_assert!((sum - (r.full - r.baseline)).abs() <= 1e-9);
        prop_assert!(r.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }
}
