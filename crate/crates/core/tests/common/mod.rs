#![allow(dead_code)]

use cfx_core::models::Monomial;
use cfx_core::{DecisionRule, DecisionSystem, ScoringFunction};
use rand::Rng;

/// Random polynomial over `m` features: up to `2m` monomials of degree 1..=3
/// with small integer coefficients, so scores are exact in floating point.
pub fn random_polynomial<R: Rng>(m: usize, rng: &mut R) -> Vec<Monomial> {
    let terms = rng.random_range(1..=2 * m);
    (0..terms)
        .map(|_| {
            let degree = rng.random_range(1..=3.min(m));
            let mut factors: Vec<usize> = (0..degree).map(|_| rng.random_range(0..m)).collect();
            factors.sort_unstable();
            factors.dedup();
            let mut c = 0;
            while c == 0 {
                c = rng.random_range(-5..=5);
            }
            Monomial::new(c as f64, factors)
        })
        .collect()
}

pub fn random_system<R: Rng>(m: usize, rng: &mut R) -> (Vec<Monomial>, DecisionSystem) {
    let terms = random_polynomial(m, rng);
    let threshold = rng.random_range(-3..=6) as f64;
    let scorer = ScoringFunction::polynomial(m, terms.clone()).unwrap();
    (
        terms,
        DecisionSystem::new(scorer, DecisionRule::at_least(threshold)).unwrap(),
    )
}

pub fn random_binary<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0..=1) as f64).collect()
}

/// Direct evaluation of a monomial list, independent of the library.
pub fn eval(terms: &[Monomial], values: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| t.factors.iter().map(|&j| values[j]).product::<f64>() * t.coefficient)
        .sum()
}

/// `values` with the features in `mask` replaced by `counterfactual`.
pub fn substitute(values: &[f64], counterfactual: &[f64], mask: u32) -> Vec<f64> {
    values
        .iter()
        .zip(counterfactual)
        .enumerate()
        .map(|(j, (&v, &c))| if mask & (1 << j) != 0 { c } else { v })
        .collect()
}

pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|j| mask & (1 << j) != 0).collect()
}
