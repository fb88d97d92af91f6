//! Feature schemas, instances and feature sets.
//!
//! Every feature value is stored as an `f64`. Binary features hold exactly
//! `0.0` or `1.0`; categorical features hold the interned vocabulary id of
//! their level, so equality of levels is equality of ids.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Binary,
    Categorical { vocabulary: Vec<String> },
}

impl FeatureKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureKind::Categorical { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Binary => "binary",
            FeatureKind::Categorical { .. } => "categorical",
        }
    }

    /// Checks that `value` is a legal value for this kind.
    pub fn conforms(&self, value: f64) -> std::result::Result<(), String> {
        match self {
            FeatureKind::Numeric if value.is_finite() => Ok(()),
            FeatureKind::Numeric => Err(format!("value {value} is not finite")),
            FeatureKind::Binary if value == 0.0 || value == 1.0 => Ok(()),
            FeatureKind::Binary => Err(format!("binary value must be 0 or 1, got {value}")),
            FeatureKind::Categorical { vocabulary } => {
                if value.fract() == 0.0 && value >= 0.0 && (value as usize) < vocabulary.len() {
                    Ok(())
                } else {
                    Err(format!(
                        "categorical id {value} outside vocabulary of {} levels",
                        vocabulary.len()
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Binary,
        }
    }

    /// A categorical feature; `levels` is interned in the given order.
    pub fn categorical<I, S>(name: impl Into<String>, levels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical {
                vocabulary: levels.into_iter().map(Into::into).collect(),
            },
        }
    }
}

/// Ordered, uniquely named list of features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Feature>", into = "Vec<Feature>")]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Schema("a schema needs at least one feature".into()));
        }
        let mut seen = HashSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
            if let FeatureKind::Categorical { vocabulary } = &f.kind {
                let mut levels = HashSet::new();
                if vocabulary.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical {:?} has no levels",
                        f.name
                    )));
                }
                for level in vocabulary {
                    if !levels.insert(level) {
                        return Err(Error::Schema(format!(
                            "categorical {:?} repeats level {level:?}",
                            f.name
                        )));
                    }
                }
            }
        }
        Ok(FeatureSchema { features })
    }

    /// Schema of `m` binary features named `A1..Am`.
    pub fn binary(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| Feature::binary(format!("A{i}"))).collect())
    }

    /// Schema of `m` numeric features named `x1..xm`.
    pub fn numeric(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| Feature::numeric(format!("x{i}"))).collect())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> Result<&Feature> {
        self.features.get(index).ok_or(Error::IndexOutOfBounds {
            index,
            len: self.features.len(),
        })
    }

    pub fn kind(&self, index: usize) -> Result<&FeatureKind> {
        self.feature(index).map(|f| &f.kind)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.features[index].name
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Builds a validated instance.
    pub fn instance(&self, values: Vec<f64>) -> Result<Instance> {
        let instance = Instance::new(values);
        self.validate(&instance)?;
        Ok(instance)
    }

    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if instance.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: instance.len(),
            });
        }
        for (j, (f, &v)) in self.features.iter().zip(instance.values()).enumerate() {
            f.kind.conforms(v).map_err(|message| Error::Conformance {
                feature: j,
                name: f.name.clone(),
                message,
            })?;
        }
        Ok(())
    }

    /// Renders a value in its natural form: category level, or number.
    pub fn render_value(&self, index: usize, value: f64) -> serde_json::Value {
        match &self.features[index].kind {
            FeatureKind::Categorical { vocabulary } => vocabulary
                .get(value as usize)
                .map(|s| serde_json::Value::String(s.clone()))
                .unwrap_or(serde_json::Value::Null),
            _ => serde_json::json!(value),
        }
    }

    pub fn set_names(&self, set: &FeatureSet) -> Vec<String> {
        set.iter().map(|j| self.name(j).to_owned()).collect()
    }
}

impl TryFrom<Vec<Feature>> for FeatureSchema {
    type Error = Error;

    fn try_from(features: Vec<Feature>) -> Result<Self> {
        FeatureSchema::new(features)
    }
}

impl From<FeatureSchema> for Vec<Feature> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

/// A feature vector aligned to some [`FeatureSchema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    values: Vec<f64>,
}

impl Instance {
    /// Wraps raw values without schema validation.
    pub fn new(values: Vec<f64>) -> Self {
        Instance { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

impl From<Vec<f64>> for Instance {
    fn from(values: Vec<f64>) -> Self {
        Instance::new(values)
    }
}

/// A set of feature positions in canonical (sorted, deduplicated) form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct FeatureSet {
    indices: Vec<usize>,
}

impl FeatureSet {
    pub fn empty() -> Self {
        FeatureSet::default()
    }

    /// All positions `0..m`.
    pub fn full(m: usize) -> Self {
        FeatureSet {
            indices: (0..m).collect(),
        }
    }

    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        FeatureSet { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// This set with `index` added.
    pub fn with(&self, index: usize) -> FeatureSet {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&index) {
            indices.insert(pos, index);
        }
        FeatureSet { indices }
    }

    /// This set with `index` removed.
    pub fn without(&self, index: usize) -> FeatureSet {
        FeatureSet {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&j| j != index)
                .collect(),
        }
    }

    /// `self ⊆ other`, by a merge over both sorted index lists.
    pub fn is_subset_of(&self, other: &FeatureSet) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut theirs = other.indices.iter();
        'outer: for &mine in &self.indices {
            for &t in theirs.by_ref() {
                if t == mine {
                    continue 'outer;
                }
                if t > mine {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn is_proper_subset_of(&self, other: &FeatureSet) -> bool {
        self.len() < other.len() && self.is_subset_of(other)
    }

    pub fn check_bounds(&self, len: usize) -> Result<()> {
        match self.indices.last() {
            Some(&index) if index >= len => Err(Error::IndexOutOfBounds { index, len }),
            _ => Ok(()),
        }
    }
}

impl From<Vec<usize>> for FeatureSet {
    fn from(indices: Vec<usize>) -> Self {
        FeatureSet::new(indices)
    }
}

impl From<FeatureSet> for Vec<usize> {
    fn from(set: FeatureSet) -> Self {
        set.indices
    }
}

impl FromIterator<usize> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        FeatureSet::new(iter)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.indices.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{j}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicate_names_rejected() {
        let err = FeatureSchema::new(vec![Feature::numeric("a"), Feature::binary("a")]);
        assert!(matches!(err, Err(Error::Schema(_))));
        assert!(FeatureSchema::new(vec![]).is_err());
    }

    #[test]
    fn instance_conformance() {
        let schema = FeatureSchema::new(vec![
            Feature::numeric("income"),
            Feature::binary("owner"),
            Feature::categorical("home", ["own", "rent"]),
        ])
        .unwrap();
        assert!(schema.instance(vec![50_000.0, 1.0, 1.0]).is_ok());
        assert!(schema.instance(vec![50_000.0, 2.0, 1.0]).is_err());
        assert!(schema.instance(vec![50_000.0, 0.0, 2.0]).is_err());
        assert!(schema.instance(vec![f64::NAN, 0.0, 0.0]).is_err());
        assert!(matches!(
            schema.instance(vec![1.0]),
            Err(Error::LengthMismatch {
                expected: 3,
                actual: 1
            })
        ));
    }

    #[test]
    fn feature_set_is_canonical() {
        let s = FeatureSet::new([3, 1, 3, 0]);
        assert_eq!(s.indices(), &[0, 1, 3]);
        assert_eq!(s.with(2).indices(), &[0, 1, 2, 3]);
        assert_eq!(s.with(1), s);
        assert_eq!(s.to_string(), "{0,1,3}");
        assert!(s.check_bounds(4).is_ok());
        assert!(s.check_bounds(3).is_err());
    }

    proptest! {
        #[test]
        fn subset_matches_naive(a in proptest::collection::vec(0usize..12, 0..8),
                                b in proptest::collection::vec(0usize..12, 0..8)) {
            let (sa, sb) = (FeatureSet::new(a), FeatureSet::new(b));
            let naive = sa.iter().all(|j| sb.contains(j));
            prop_assert_eq!(sa.is_subset_of(&sb), naive);
            prop_assert_eq!(sa.is_proper_subset_of(&sb), naive && sa != sb);
        }
    }
}
