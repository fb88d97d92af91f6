use cfx_core::models::synthetic;
use cfx_core::{
    shapley_exact, shapley_permutation_sample, shapley_sampled, AttributionTarget,
    CounterfactualPolicy, FeatureSet, Instance, ShapleyMethod,
};
use rayon::prelude::*;

#[test]
fn sampled_values_concentrate_on_example_one() {
    let scorer = synthetic::example1();
    let instance = Instance::new(vec![1.0; 3]);
    let policy = CounterfactualPolicy::zero(3);
    let active = FeatureSet::full(3);
    let expected = [6.0, 6.0, 10.0];
    let within = (0..100u64)
        .into_par_iter()
        .filter(|&seed| {
            let r = shapley_permutation_sample(
                AttributionTarget::Score(&scorer),
                &instance,
                &policy,
                &active,
                100_000,
                seed,
            )
            .unwrap();
            assert!(matches!(r.method, ShapleyMethod::Sampled { .. }));
            r.values
                .iter()
                .zip(expected)
                .all(|(v, e)| (v - e).abs() <= 0.2)
        })
        .count();
    assert!(within >= 95, "{within} of 100 seeds within tolerance");
}

#[test]
fn enough_samples_switch_to_enumeration() {
    let scorer = synthetic::example1();
    let instance = Instance::new(vec![1.0; 3]);
    let policy = CounterfactualPolicy::zero(3);
    let active = FeatureSet::full(3);
    let target = AttributionTarget::Score(&scorer);
    let sampled = shapley_sampled(target, &instance, &policy, &active, 100_000, 7).unwrap();
    let exact = shapley_exact(target, &instance, &policy, &active).unwrap();
    assert_eq!(
        sampled.method,
        ShapleyMethod::ExactEscalated {
            samples: 100_000,
            seed: 7
        }
    );
    assert_eq!(sampled.values, exact.values);
    assert_eq!(sampled.values, vec![6.0, 6.0, 10.0]);
}

#[test]
fn few_samples_estimate_efficiently() {
    // Every sampled order sums to full - baseline, so the estimate does too.
    let scorer = synthetic::example3();
    let instance = Instance::new(vec![1.0, 1.0, 1.0]);
    let policy = CounterfactualPolicy::zero(3);
    let r = shapley_sampled(
        AttributionTarget::Score(&scorer),
        &instance,
        &policy,
        &FeatureSet::full(3),
        5,
        1,
    )
    .unwrap();
    let sum: f64 = r.values.iter().sum();
    assert!((sum - (r.full - r.baseline)).abs() < 1e-12);
}
