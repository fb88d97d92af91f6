//! Shared fixtures for the benchmarks.

use cfx_core::{CounterfactualPolicy, DecisionRule, DecisionSystem, Instance, ScoringFunction};

/// A decision to explain together with the values evidence is removed to.
pub struct Fixture {
    pub system: DecisionSystem,
    pub instance: Instance,
    pub policy: CounterfactualPolicy,
}

/// Weights spread over `[0.05, 1.05)` without a random generator.
fn weights(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| ((j * 7919 + 13) % 100) as f64 / 100.0 + 0.05)
        .collect()
}

/// Logistic model over `m` binary features, instance with every feature
/// on, threshold halfway along the score range so that several features
/// must be removed.
pub fn logistic(m: usize) -> Fixture {
    let w = weights(m);
    let total: f64 = w.iter().sum();
    let scorer = ScoringFunction::logistic(w, -total / 2.0);
    Fixture {
        system: DecisionSystem {
            scorer,
            rule: DecisionRule::at_least(0.8),
        },
        instance: Instance::new(vec![1.0; m]),
        policy: CounterfactualPolicy::zero(m),
    }
}

/// The worked example `id` at `(1, 1, 1)`.
pub fn worked(id: u8) -> Fixture {
    Fixture {
        system: cfx_core::models::synthetic::system(id),
        instance: Instance::new(vec![1.0; 3]),
        policy: CounterfactualPolicy::zero(3),
    }
}
