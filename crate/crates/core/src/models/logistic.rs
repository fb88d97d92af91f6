use serde::{Deserialize, Serialize};

use super::{ScoringFunction, TrainReport};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Stop once the full gradient norm drops to this value.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Constant step size; `None` uses `1 / L` for an estimated Lipschitz
    /// constant `L` of the gradient.
    pub learning_rate: Option<f64>,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            tolerance: 1e-8,
            max_epochs: 10_000,
            learning_rate: None,
        }
    }
}

/// Mean negative log-likelihood plus `l2·‖w‖²/2`; the intercept is not
/// penalized. Rows are stored sparsely.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<f64>,
    n_features: usize,
    l2: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticObjective {
    pub fn new(rows: &[&[f64]], labels: &[f64], l2: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("no training rows".into()));
        }
        let n_features = rows[0].len();
        let sparse = rows
            .iter()
            .map(|r| {
                r.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, v)| v != 0.0)
                    .collect()
            })
            .collect();
        Self::from_sparse(sparse, labels.to_vec(), n_features, l2)
    }

    /// Builds the objective from rows given as `(feature, value)` pairs;
    /// absent features are zero.
    pub fn from_sparse(
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<f64>,
        n_features: usize,
        l2: f64,
    ) -> Result<Self> {
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l2 must be a finite value >= 0, got {l2}"
            )));
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidArgument(format!(
                "classification target must be 0/1, found {bad}"
            )));
        }
        let positives = labels.iter().filter(|&&y| y == 1.0).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::SingleClassTarget(
                labels.first().copied().unwrap_or(0.0),
            ));
        }
        if let Some(&(j, _)) = rows.iter().flatten().find(|&&(j, _)| j >= n_features) {
            return Err(Error::IndexOutOfBounds {
                index: j,
                len: n_features,
            });
        }
        Ok(LogisticObjective {
            rows,
            labels,
            n_features,
            l2,
        })
    }

    pub fn from_dataset(train: &Dataset, l2: f64) -> Result<Self> {
        train.require_numeric_features()?;
        let labels = train
            .target()
            .ok_or_else(|| Error::InvalidArgument("dataset has no target column".into()))?;
        let rows: Vec<&[f64]> = train.rows().iter().map(|r| r.values()).collect();
        Self::new(&rows, labels, l2)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn margin(row: &[(usize, f64)], weights: &[f64], intercept: f64) -> f64 {
        row.iter().fold(intercept, |z, &(j, x)| z + weights[j] * x)
    }

    pub fn loss(&self, weights: &[f64], intercept: f64) -> f64 {
        let n = self.rows.len() as f64;
        let nll: f64 = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(row, &y)| {
                let z = Self::margin(row, weights, intercept);
                softplus(z) - y * z
            })
            .sum();
        nll / n + 0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Returns `(loss, ∂/∂w, ∂/∂b)`.
    pub fn loss_and_gradient(&self, weights: &[f64], intercept: f64) -> (f64, Vec<f64>, f64) {
        let n = self.rows.len() as f64;
        let mut grad = vec![0.0; self.n_features];
        let mut grad_b = 0.0;
        let mut nll = 0.0;
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            let z = Self::margin(row, weights, intercept);
            nll += softplus(z) - y * z;
            let r = sigmoid_unclamped(z) - y;
            grad_b += r;
            for &(j, x) in row {
                grad[j] += r * x;
            }
        }
        for (g, w) in grad.iter_mut().zip(weights) {
            *g = *g / n + self.l2 * w;
        }
        let loss = nll / n + 0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>();
        (loss, grad, grad_b / n)
    }

    /// Upper estimate of the gradient's Lipschitz constant:
    /// `λmax(ẊᵀẊ/n)/4 + l2` with `Ẋ` the intercept-augmented design,
    /// `λmax` from a fixed number of power iterations.
    pub fn lipschitz(&self) -> f64 {
        let p = self.n_features + 1;
        let n = self.rows.len() as f64;
        let mut v = vec![1.0 / (p as f64).sqrt(); p];
        let mut lambda = 0.0;
        for _ in 0..100 {
            let mut next = vec![0.0; p];
            for row in &self.rows {
                let dot = row.iter().fold(v[p - 1], |acc, &(j, x)| acc + v[j] * x);
                for &(j, x) in row {
                    next[j] += dot * x;
                }
                next[p - 1] += dot;
            }
            let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt() / n;
            if norm == 0.0 {
                break;
            }
            lambda = norm;
            let scale = 1.0 / (norm * n);
            v = next.into_iter().map(|a| a * scale).collect();
        }
        1.1 * 0.25 * lambda + self.l2
    }
}

fn sigmoid_unclamped(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Full-batch gradient descent from zero weights with a constant step.
pub fn train_logistic(
    train: &Dataset,
    l2: f64,
    config: &LogisticConfig,
) -> Result<(ScoringFunction, TrainReport)> {
    let objective = LogisticObjective::from_dataset(train, l2)?;
    fit_objective(&objective, config)
}

/// Gradient descent on a prepared objective; see [`train_logistic`].
pub fn fit_objective(
    objective: &LogisticObjective,
    config: &LogisticConfig,
) -> Result<(ScoringFunction, TrainReport)> {
    let step = match config.learning_rate {
        Some(lr) if lr > 0.0 && lr.is_finite() => lr,
        Some(lr) => {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be > 0, got {lr}"
            )))
        }
        None => 1.0 / objective.lipschitz(),
    };
    let mut weights = vec![0.0; objective.n_features()];
    let mut intercept = 0.0;
    let mut epoch = 0;
    let (mut loss, mut grad, mut grad_b) = objective.loss_and_gradient(&weights, intercept);
    let mut norm = gradient_norm(&grad, grad_b);
    while epoch < config.max_epochs && norm > config.tolerance {
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        intercept -= step * grad_b;
        epoch += 1;
        (loss, grad, grad_b) = objective.loss_and_gradient(&weights, intercept);
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        norm = gradient_norm(&grad, grad_b);
    }
    let report = TrainReport {
        iterations: epoch,
        final_loss: loss,
        gradient_norm: norm,
        converged: norm <= config.tolerance,
    };
    Ok((ScoringFunction::logistic(weights, intercept), report))
}

fn gradient_norm(grad: &[f64], grad_b: f64) -> f64 {
    (grad.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt()
}
