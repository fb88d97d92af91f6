use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScoringFunction;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::schema::{FeatureKind, FeatureSchema, Instance};

pub const MODEL_DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
}

/// Z-scoring parameters for numeric columns. Binary and categorical
/// columns keep mean 0 and scale 1 so they pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    pub fn fit(data: &Dataset) -> Self {
        let m = data.schema().len();
        let n = data.len().max(1) as f64;
        let mut means = vec![0.0; m];
        let mut scales = vec![1.0; m];
        for (j, feature) in data.schema().features().iter().enumerate() {
            if feature.kind != FeatureKind::Numeric {
                continue;
            }
            let mean = data.rows().iter().map(|r| r.values()[j]).sum::<f64>() / n;
            let var = data
                .rows()
                .iter()
                .map(|r| (r.values()[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            means[j] = mean;
            scales[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Standardization { means, scales }
    }

    pub fn transform(&self, instance: &Instance) -> Instance {
        Instance::new(
            instance
                .values()
                .iter()
                .zip(self.means.iter().zip(&self.scales))
                .map(|(x, (m, s))| (x - m) / s)
                .collect(),
        )
    }

    /// The dataset in standardized units.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let rows = data.rows().iter().map(|r| self.transform(r)).collect();
        Dataset::new(
            data.schema().clone(),
            rows,
            data.target().map(<[f64]>::to_vec),
        )
    }

    /// Rewrites weights learned on standardized inputs as raw-unit weights.
    pub fn fold(&self, weights: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = weights
            .iter()
            .zip(&self.scales)
            .map(|(w, s)| w / s)
            .collect();
        let shift: f64 = raw.iter().zip(&self.means).map(|(w, m)| w * m).sum();
        (raw, intercept - shift)
    }
}

/// Versioned on-disk form of a trained linear or logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub kind: ModelKind,
    pub features: Vec<String>,
    /// In standardized units when `standardization` is present.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardization: Option<Standardization>,
}

impl ModelDocument {
    pub fn new(
        schema: &FeatureSchema,
        function: &ScoringFunction,
        standardization: Option<Standardization>,
    ) -> Result<Self> {
        let (kind, weights, intercept) = match function {
            ScoringFunction::Linear { weights, intercept } => {
                (ModelKind::Linear, weights, intercept)
            }
            ScoringFunction::Logistic { weights, intercept } => {
                (ModelKind::Logistic, weights, intercept)
            }
            other => {
                return Err(Error::Model(format!(
                    "only linear and logistic models can be saved, not {}",
                    other.kind_name()
                )))
            }
        };
        if weights.len() != schema.len() {
            return Err(Error::LengthMismatch {
                expected: schema.len(),
                actual: weights.len(),
            });
        }
        Ok(ModelDocument {
            version: MODEL_DOCUMENT_VERSION,
            kind,
            features: schema.names(),
            weights: weights.clone(),
            intercept: *intercept,
            standardization,
        })
    }

    /// The scoring function in raw feature units.
    pub fn scoring_function(&self) -> Result<ScoringFunction> {
        if self.version != MODEL_DOCUMENT_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MODEL_DOCUMENT_VERSION,
            });
        }
        if self.weights.len() != self.features.len() {
            return Err(Error::Model(format!(
                "{} weights for {} features",
                self.weights.len(),
                self.features.len()
            )));
        }
        let (weights, intercept) = match &self.standardization {
            Some(s)
                if s.means.len() == self.weights.len() && s.scales.len() == self.weights.len() =>
            {
                s.fold(&self.weights, self.intercept)
            }
            Some(_) => return Err(Error::Model("standardization length mismatch".into())),
            None => (self.weights.clone(), self.intercept),
        };
        Ok(match self.kind {
            ModelKind::Linear => ScoringFunction::linear(weights, intercept),
            ModelKind::Logistic => ScoringFunction::logistic(weights, intercept),
        })
    }

    /// Errors unless the document's feature names equal the schema's.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        if self.features != schema.names() {
            return Err(Error::Model(format!(
                "model features {:?} do not match data features {:?}",
                self.features,
                schema.names()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.version != MODEL_DOCUMENT_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: MODEL_DOCUMENT_VERSION,
            });
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }
}
