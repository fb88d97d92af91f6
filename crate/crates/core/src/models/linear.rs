use nalgebra::{DMatrix, DVector};

use super::{ScoringFunction, TrainReport};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Pivots of the Jacobi-scaled Cholesky factor below this are singular.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Ridge regression with an unpenalized intercept.
///
/// Solves `(XcᵀXc + l2·I) w = Xcᵀyc` on centered data by a Cholesky
/// factorization of the column-scaled system, then recovers the intercept
/// from the means. Returns `(weights, intercept)`.
pub fn ridge_solve(rows: &[&[f64]], y: &[f64], l2: f64) -> Result<(Vec<f64>, f64)> {
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l2 must be a finite value >= 0, got {l2}"
        )));
    }
    if rows.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: rows.len(),
            actual: y.len(),
        });
    }
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least 2 rows, got {n}"
        )));
    }
    let p = rows[0].len();
    let nf = n as f64;

    let mut x_mean = vec![0.0; p];
    for row in rows {
        if row.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: row.len(),
            });
        }
        for (m, v) in x_mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= nf);
    let y_mean = y.iter().sum::<f64>() / nf;
    if p == 0 {
        return Ok((Vec::new(), y_mean));
    }

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut centered = vec![0.0; p];
    for (row, &yi) in rows.iter().zip(y) {
        for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = yi - y_mean;
        for a in 0..p {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            rhs[a] += ca * yc;
            for b in a..p {
                gram[(a, b)] += ca * centered[b];
            }
        }
    }
    for a in 0..p {
        gram[(a, a)] += l2;
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let scale: Vec<f64> = (0..p).map(|j| gram[(j, j)].sqrt()).collect();
    if scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::Singular);
    }
    let scaled = DMatrix::from_fn(p, p, |a, b| gram[(a, b)] / (scale[a] * scale[b]));
    let scaled_rhs = DVector::from_fn(p, |a, _| rhs[a] / scale[a]);
    let chol = nalgebra::linalg::Cholesky::new(scaled).ok_or(Error::Singular)?;
    let l = chol.l_dirty();
    if (0..p).any(|j| l[(j, j)] * l[(j, j)] <= PIVOT_TOLERANCE) {
        return Err(Error::Singular);
    }
    let z = chol.solve(&scaled_rhs);
    let weights: Vec<f64> = (0..p).map(|j| z[j] / scale[j]).collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Singular);
    }
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok((weights, intercept))
}

/// Fits a ridge regression on the dataset's real-valued target.
pub fn train_linear(train: &Dataset, l2: f64) -> Result<(ScoringFunction, TrainReport)> {
    train.require_numeric_features()?;
    let y = train
        .target()
        .ok_or_else(|| Error::InvalidArgument("dataset has no target column".into()))?;
    let rows: Vec<&[f64]> = train.rows().iter().map(|r| r.values()).collect();
    let (weights, intercept) = ridge_solve(&rows, y, l2)?;

    let n = rows.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut sse = 0.0;
    for (row, &yi) in rows.iter().zip(y) {
        let r = super::linear_term(&weights, intercept, row) - yi;
        sse += r * r;
        for (g, x) in grad.iter_mut().zip(row.iter()) {
            *g += r * x;
        }
    }
    let gradient_norm = grad
        .iter()
        .zip(&weights)
        .map(|(g, w)| (g / n + l2 * w).powi(2))
        .sum::<f64>()
        .sqrt();
    let report = TrainReport {
        iterations: 1,
        final_loss: sse / n,
        gradient_norm,
        converged: true,
    };
    Ok((ScoringFunction::linear(weights, intercept), report))
}
