//! Scoring functions and their trainers.

mod document;
mod linear;
mod logistic;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::decision::{Evaluator, Scorer};
use crate::error::{Error, Result};
use crate::schema::Instance;

pub use document::{ModelDocument, ModelKind, Standardization, MODEL_DOCUMENT_VERSION};
pub use linear::{ridge_solve, train_linear};
pub use logistic::{fit_objective, train_logistic, LogisticConfig, LogisticObjective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    /// Feature positions multiplied together; repeats raise powers.
    pub factors: Vec<usize>,
}

impl Monomial {
    pub fn new(coefficient: f64, factors: impl Into<Vec<usize>>) -> Self {
        Monomial {
            coefficient,
            factors: factors.into(),
        }
    }

    fn eval(&self, values: &[f64]) -> f64 {
        self.factors
            .iter()
            .fold(self.coefficient, |acc, &j| acc * values[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub n_features: usize,
    pub terms: Vec<Monomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoringFunction {
    Linear { weights: Vec<f64>, intercept: f64 },
    Logistic { weights: Vec<f64>, intercept: f64 },
    Polynomial(Polynomial),
    Product { components: Vec<ScoringFunction> },
}

impl ScoringFunction {
    pub fn linear(weights: Vec<f64>, intercept: f64) -> Self {
        ScoringFunction::Linear { weights, intercept }
    }

    pub fn logistic(weights: Vec<f64>, intercept: f64) -> Self {
        ScoringFunction::Logistic { weights, intercept }
    }

    pub fn polynomial(n_features: usize, terms: Vec<Monomial>) -> Result<Self> {
        for term in &terms {
            if let Some(&j) = term.factors.iter().find(|&&j| j >= n_features) {
                return Err(Error::Model(format!(
                    "monomial references feature {j} of {n_features}"
                )));
            }
        }
        Ok(ScoringFunction::Polynomial(Polynomial {
            n_features,
            terms,
        }))
    }

    pub fn product(components: Vec<ScoringFunction>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Model(
                "a product needs at least two components".into(),
            ));
        }
        let m = components[0].n_features();
        if let Some(c) = components.iter().find(|c| c.n_features() != m) {
            return Err(Error::Model(format!(
                "product components disagree on feature count ({m} vs {})",
                c.n_features()
            )));
        }
        Ok(ScoringFunction::Product { components })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ScoringFunction::Linear { .. } => "linear",
            ScoringFunction::Logistic { .. } => "logistic",
            ScoringFunction::Polynomial(_) => "polynomial",
            ScoringFunction::Product { .. } => "product",
        }
    }

    /// Weights and intercept of a linear or logistic model.
    pub fn linear_parts(&self) -> Option<(&[f64], f64)> {
        match self {
            ScoringFunction::Linear { weights, intercept }
            | ScoringFunction::Logistic { weights, intercept } => Some((weights, *intercept)),
            _ => None,
        }
    }
}

pub fn score(function: &ScoringFunction, instance: &Instance) -> Result<f64> {
    function.score(instance)
}

pub(crate) fn linear_term(weights: &[f64], intercept: f64, values: &[f64]) -> f64 {
    weights
        .iter()
        .zip(values)
        .fold(intercept, |z, (w, x)| z + w * x)
}

/// Logistic link, kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl Scorer for ScoringFunction {
    fn n_features(&self) -> usize {
        match self {
            ScoringFunction::Linear { weights, .. } | ScoringFunction::Logistic { weights, .. } => {
                weights.len()
            }
            ScoringFunction::Polynomial(p) => p.n_features,
            ScoringFunction::Product { components } => {
                components.first().map_or(0, |c| c.n_features())
            }
        }
    }

    fn score_values(&self, values: &[f64]) -> f64 {
        match self {
            ScoringFunction::Linear { weights, intercept } => {
                linear_term(weights, *intercept, values)
            }
            ScoringFunction::Logistic { weights, intercept } => {
                sigmoid(linear_term(weights, *intercept, values))
            }
            ScoringFunction::Polynomial(p) => p.terms.iter().map(|t| t.eval(values)).sum(),
            ScoringFunction::Product { components } => components
                .iter()
                .fold(1.0, |acc, c| acc * c.score_values(values)),
        }
    }

    fn evaluator<'a>(&'a self, base: &Instance) -> Box<dyn Evaluator + 'a> {
        match self {
            ScoringFunction::Linear { weights, intercept } => {
                Box::new(LinearEvaluator::new(weights, *intercept, base, false))
            }
            ScoringFunction::Logistic { weights, intercept } => {
                Box::new(LinearEvaluator::new(weights, *intercept, base, true))
            }
            ScoringFunction::Polynomial(_) => {
                Box::new(crate::decision::RecomputeEvaluator::new(self, base))
            }
            ScoringFunction::Product { components } => Box::new(ProductEvaluator {
                parts: components.iter().map(|c| c.evaluator(base)).collect(),
            }),
        }
    }
}

/// Keeps `w·x + b` up to date one coordinate at a time.
struct LinearEvaluator<'a> {
    weights: &'a [f64],
    base: Vec<f64>,
    values: Vec<f64>,
    touched: Vec<usize>,
    base_z: f64,
    z: f64,
    logistic: bool,
}

impl<'a> LinearEvaluator<'a> {
    fn new(weights: &'a [f64], intercept: f64, base: &Instance, logistic: bool) -> Self {
        let z = linear_term(weights, intercept, base.values());
        LinearEvaluator {
            weights,
            base: base.values().to_vec(),
            values: base.values().to_vec(),
            touched: Vec::new(),
            base_z: z,
            z,
            logistic,
        }
    }
}

impl Evaluator for LinearEvaluator<'_> {
    fn set(&mut self, feature: usize, value: f64) {
        let old = self.values[feature];
        if old != value {
            self.z += self.weights[feature] * (value - old);
            self.values[feature] = value;
            self.touched.push(feature);
        }
    }

    fn score(&mut self) -> f64 {
        if self.logistic {
            sigmoid(self.z)
        } else {
            self.z
        }
    }

    fn reset(&mut self) {
        for j in self.touched.drain(..) {
            self.values[j] = self.base[j];
        }
        self.z = self.base_z;
    }

    fn values(&self) -> &[f64] {
        &self.values
    }
}

struct ProductEvaluator<'a> {
    parts: Vec<Box<dyn Evaluator + 'a>>,
}

impl Evaluator for ProductEvaluator<'_> {
    fn set(&mut self, feature: usize, value: f64) {
        for p in &mut self.parts {
            p.set(feature, value);
        }
    }

    fn score(&mut self) -> f64 {
        self.parts.iter_mut().fold(1.0, |acc, p| acc * p.score())
    }

    fn reset(&mut self) {
        for p in &mut self.parts {
            p.reset();
        }
    }

    fn values(&self) -> &[f64] {
        self.parts[0].values()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Score `t` such that `score >= t` selects `ceil(n * top_fraction)` rows of
/// `reference` (barring ties at `t`).
pub fn percentile_threshold<S: Scorer>(
    scorer: &S,
    reference: &Dataset,
    top_fraction: f64,
) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must lie in (0, 1), got {top_fraction}"
        )));
    }
    if reference.is_empty() {
        return Err(Error::Empty("reference dataset has no rows".into()));
    }
    let scores = reference
        .rows()
        .iter()
        .map(|row| scorer.score(row))
        .collect::<Result<Vec<_>>>()?;
    top_fraction_threshold(scores, top_fraction)
}

/// Score `t` such that `score >= t` selects `ceil(n * top_fraction)` of
/// `scores` (barring ties at `t`).
pub fn top_fraction_threshold(mut scores: Vec<f64>, top_fraction: f64) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction must lie in (0, 1), got {top_fraction}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::Empty("no scores to rank".into()));
    }
    scores.sort_by(|a, b| b.total_cmp(a));
    let n = scores.len();
    let selected = ((n as f64 * top_fraction) - 1e-9)
        .ceil()
        .clamp(1.0, n as f64) as usize;
    Ok(scores[selected - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::FeatureSchema;
    use proptest::prelude::*;

    fn ones() -> Instance {
        Instance::new(vec![1.0; 3])
    }

    #[test]
    fn worked_example_scores() {
        assert_eq!(synthetic::example(1).score(&ones()).unwrap(), 22.0);
        assert_eq!(synthetic::example(2).score(&ones()).unwrap(), 1.0);
        // 1 + 1 - 2 - 1 - 1 + 3
        assert_eq!(synthetic::example(3).score(&ones()).unwrap(), 1.0);
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let f = ScoringFunction::linear(vec![1.0, 2.0], 0.0);
        assert!(matches!(
            f.score(&ones()),
            Err(Error::LengthMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn zero_logistic_scores_one_half() {
        let f = ScoringFunction::logistic(vec![0.0; 3], 0.0);
        assert_eq!(f.score(&ones()).unwrap(), 0.5);
    }

    #[test]
    fn invalid_constructions() {
        assert!(ScoringFunction::polynomial(2, vec![Monomial::new(1.0, [2])]).is_err());
        assert!(ScoringFunction::product(vec![synthetic::example(1)]).is_err());
        assert!(ScoringFunction::product(vec![
            synthetic::example(1),
            ScoringFunction::linear(vec![1.0], 0.0)
        ])
        .is_err());
    }

    #[test]
    fn percentile_threshold_order_statistics() {
        let schema = FeatureSchema::numeric(1).unwrap();
        let rows = (1..=10)
            .map(|i| Instance::new(vec![i as f64 / 10.0]))
            .collect();
        let data = Dataset::new(schema, rows, None).unwrap();
        let identity = ScoringFunction::linear(vec![1.0], 0.0);
        assert_eq!(percentile_threshold(&identity, &data, 0.2).unwrap(), 0.9);
        assert_eq!(percentile_threshold(&identity, &data, 0.95).unwrap(), 0.1);
        assert!(percentile_threshold(&identity, &data, 1.0).is_err());
        assert!(percentile_threshold(&identity, &data, 0.0).is_err());
    }

    fn naive_poly(terms: &[(f64, Vec<usize>)], x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, factors) in terms {
            let mut term = *c;
            for &j in factors {
                term *= x[j];
            }
            total += term;
        }
        total
    }

    proptest! {
        #[test]
        fn logistic_scores_stay_in_open_unit_interval(
            w in proptest::collection::vec(-1e3f64..1e3, 3),
            b in -1e3f64..1e3,
            x in proptest::collection::vec(-1e3f64..1e3, 3),
        ) {
            let s = ScoringFunction::logistic(w, b).score(&Instance::new(x)).unwrap();
            prop_assert!(s > 0.0 && s < 1.0);
        }

        #[test]
        fn polynomial_matches_termwise_evaluator(
            terms in proptest::collection::vec(
                (-10.0f64..10.0, proptest::collection::vec(0usize..4, 0..4)), 0..8),
            x in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let f = ScoringFunction::polynomial(
                4,
                terms.iter().map(|(c, fs)| Monomial::new(*c, fs.clone())).collect(),
            ).unwrap();
            let got = f.score(&Instance::new(x.clone())).unwrap();
            let want = naive_poly(&terms, &x);
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
        }

        #[test]
        fn product_of_identical_components_is_a_power(
            w in proptest::collection::vec(-2.0f64..2.0, 3),
            x in proptest::collection::vec(-2.0f64..2.0, 3),
            copies in 2usize..5,
        ) {
            let base = ScoringFunction::logistic(w, 0.1);
            let product = ScoringFunction::product(vec![base.clone(); copies]).unwrap();
            let inst = Instance::new(x);
            let s = base.score(&inst).unwrap();
            let p = product.score(&inst).unwrap();
            prop_assert!((p - s.powi(copies as i32)).abs() <= 1e-12);
        }

        #[test]
        fn incremental_evaluator_tracks_full_rescoring(
            w in proptest::collection::vec(-2.0f64..2.0, 5),
            x in proptest::collection::vec(-2.0f64..2.0, 5),
            patch in proptest::collection::vec((0usize..5, -2.0f64..2.0), 0..6),
        ) {
            let f = ScoringFunction::product(vec![
                ScoringFunction::logistic(w.clone(), 0.3),
                ScoringFunction::linear(w, -0.2),
            ]).unwrap();
            let base = Instance::new(x);
            let mut ev = f.evaluator(&base);
            for &(j, v) in &patch {
                ev.set(j, v);
            }
            let fast = ev.score();
            let exact = f.score_values(ev.values());
            prop_assert!((fast - exact).abs() <= 1e-12);
            ev.reset();
            prop_assert_eq!(ev.score(), f.score(&base).unwrap());
        }
    }
}
