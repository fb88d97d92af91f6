//! The three-feature worked examples: scoring functions over binary
//! `A1, A2, A3` decided by `score >= 1`.

use super::{Monomial, ScoringFunction};
use crate::decision::{DecisionRule, DecisionSystem};

/// `A1 + A2 + 10·A1·A3 + 10·A2·A3`
pub fn example1() -> ScoringFunction {
    ScoringFunction::Polynomial(super::Polynomial {
        n_features: 3,
        terms: vec![
            Monomial::new(1.0, [0]),
            Monomial::new(1.0, [1]),
            Monomial::new(10.0, [0, 2]),
            Monomial::new(10.0, [1, 2]),
        ],
    })
}

/// `A1·A2`
pub fn example2() -> ScoringFunction {
    ScoringFunction::Polynomial(super::Polynomial {
        n_features: 3,
        terms: vec![Monomial::new(1.0, [0, 1])],
    })
}

/// `A1 + A2 − 2·A1·A2 − A1·A3 − A2·A3 + 3·A1·A2·A3`
pub fn example3() -> ScoringFunction {
    ScoringFunction::Polynomial(super::Polynomial {
        n_features: 3,
        terms: vec![
            Monomial::new(1.0, [0]),
            Monomial::new(1.0, [1]),
            Monomial::new(-2.0, [0, 1]),
            Monomial::new(-1.0, [0, 2]),
            Monomial::new(-1.0, [1, 2]),
            Monomial::new(3.0, [0, 1, 2]),
        ],
    })
}

/// Scoring function of example `id` (1, 2 or 3).
///
/// # Panics
///
/// On any other id.
pub fn example(id: u8) -> ScoringFunction {
    match id {
        1 => example1(),
        2 => example2(),
        3 => example3(),
        _ => panic!("no worked example {id}"),
    }
}

/// Decision system `C_id`: decision 1 iff the example score is at least 1.
pub fn system(id: u8) -> DecisionSystem {
    DecisionSystem {
        scorer: example(id),
        rule: DecisionRule::at_least(1.0),
    }
}
