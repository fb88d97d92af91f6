//! Datasets: CSV ingestion with kind inference, column statistics and
//! seeded train/holdout splits.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Feature, FeatureKind, FeatureSchema, Instance};

/// Rows aligned to a schema plus an optional label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Vec<Instance>,
    target: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        schema: FeatureSchema,
        rows: Vec<Instance>,
        target: Option<Vec<f64>>,
    ) -> Result<Self> {
        for row in &rows {
            schema.validate(row)?;
        }
        if let Some(t) = &target {
            if t.len() != rows.len() {
                return Err(Error::LengthMismatch {
                    expected: rows.len(),
                    actual: t.len(),
                });
            }
            if let Some(bad) = t.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "target value {bad} is not finite"
                )));
            }
        }
        Ok(Dataset {
            schema,
            rows,
            target,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Instance] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> Result<&Instance> {
        self.rows.get(index).ok_or(Error::IndexOutOfBounds {
            index,
            len: self.rows.len(),
        })
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values()[index]).collect()
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut rows = Vec::with_capacity(indices.len());
        let mut target = self
            .target
            .as_ref()
            .map(|_| Vec::with_capacity(indices.len()));
        for &i in indices {
            rows.push(self.row(i)?.clone());
            if let (Some(out), Some(t)) = (target.as_mut(), &self.target) {
                out.push(t[i]);
            }
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            rows,
            target,
        })
    }

    /// The rows whose mask entry is true.
    pub fn filter(&self, mask: &[bool]) -> Result<Dataset> {
        check_mask(mask, self.len())?;
        let indices: Vec<usize> = (0..self.len()).filter(|&i| mask[i]).collect();
        self.subset(&indices)
    }

    /// Replaces (or drops) the label column.
    pub fn with_target(self, target: Option<Vec<f64>>) -> Result<Dataset> {
        Dataset::new(self.schema, self.rows, target)
    }

    /// Errors if any feature is categorical; linear trainers need
    /// one-hot encoded inputs.
    pub fn require_numeric_features(&self) -> Result<()> {
        match self
            .schema
            .features()
            .iter()
            .find(|f| f.kind.is_categorical())
        {
            Some(f) => Err(Error::Schema(format!(
                "feature {} is categorical; one-hot encode it before training",
                f.name
            ))),
            None => Ok(()),
        }
    }
}

fn check_mask(mask: &[bool], len: usize) -> Result<()> {
    if mask.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: mask.len(),
        });
    }
    Ok(())
}

/// Forces a column's kind instead of inferring it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindHint {
    Numeric,
    Binary,
    Categorical,
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Column read as the label instead of a feature.
    pub target: Option<String>,
    pub hints: HashMap<String, KindHint>,
}

impl CsvOptions {
    pub fn with_target(target: impl Into<String>) -> Self {
        CsvOptions {
            target: Some(target.into()),
            hints: HashMap::new(),
        }
    }
}

pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv(file, path, options)
}

/// Parses CSV from any reader; `path` only labels error messages.
pub fn read_csv<R: Read>(reader: R, path: &Path, options: &CsvOptions) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |source: csv::Error| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let headers: Vec<String> = csv
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut seen = BTreeSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate column name {h:?}")));
        }
    }
    let target_col = match &options.target {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("target column {name:?} not found")))?,
        ),
        None => None,
    };
    for name in options.hints.keys() {
        if !headers.contains(name) {
            return Err(Error::Schema(format!(
                "kind hint for unknown column {name:?}"
            )));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    let mut lines: Vec<u64> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        for (c, (cell, name)) in record.iter().zip(&headers).enumerate() {
            if cell.is_empty() {
                return Err(parse_error(
                    path,
                    line,
                    format!("missing value in column {name:?}"),
                ));
            }
            cells[c].push(cell.to_owned());
        }
        lines.push(line);
    }

    let mut features = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut target = None;
    for (c, name) in headers.iter().enumerate() {
        if Some(c) == target_col {
            let values = parse_reals(&cells[c], &lines, path, name)?;
            target = Some(values);
            continue;
        }
        let (kind, values) = infer_column(&cells[c], &lines, path, name, options.hints.get(name))?;
        features.push(Feature {
            name: name.clone(),
            kind,
        });
        columns.push(values);
    }
    let schema = FeatureSchema::new(features)?;
    let rows = (0..lines.len())
        .map(|i| Instance::new(columns.iter().map(|col| col[i]).collect()))
        .collect();
    Dataset::new(schema, rows, target)
}

fn parse_error(path: &Path, line: u64, message: String) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    }
}

fn parse_reals(cells: &[String], lines: &[u64], path: &Path, name: &str) -> Result<Vec<f64>> {
    cells
        .iter()
        .zip(lines)
        .map(|(cell, &line)| match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_error(
                path,
                line,
                format!("column {name:?}: cannot parse {cell:?} as a number"),
            )),
        })
        .collect()
}

fn infer_column(
    cells: &[String],
    lines: &[u64],
    path: &Path,
    name: &str,
    hint: Option<&KindHint>,
) -> Result<(FeatureKind, Vec<f64>)> {
    let categorical = |cells: &[String]| {
        let vocabulary: Vec<String> = cells
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ids: HashMap<&str, usize> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let values = cells.iter().map(|c| ids[c.as_str()] as f64).collect();
        (FeatureKind::Categorical { vocabulary }, values)
    };
    match hint {
        Some(KindHint::Categorical) => Ok(categorical(cells)),
        Some(KindHint::Numeric) => {
            Ok((FeatureKind::Numeric, parse_reals(cells, lines, path, name)?))
        }
        Some(KindHint::Binary) => {
            let values = parse_reals(cells, lines, path, name)?;
            if let Some(i) = values.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(parse_error(
                    path,
                    lines[i],
                    format!("column {name:?} is declared binary but holds {}", cells[i]),
                ));
            }
            Ok((FeatureKind::Binary, values))
        }
        None => {
            let parsed: Option<Vec<f64>> = cells
                .iter()
                .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            Ok(match parsed {
                Some(values) if values.iter().all(|&v| v == 0.0 || v == 1.0) => {
                    (FeatureKind::Binary, values)
                }
                Some(values) => (FeatureKind::Numeric, values),
                None => categorical(cells),
            })
        }
    }
}

/// Writes the dataset with a header row; the target, if any, goes last
/// under `target_name`.
pub fn write_csv(data: &Dataset, path: &Path, target_name: &str) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_csv_to(data, file, target_name).map_err(|source| Error::Csv {
        path: path.to_owned(),
        source,
    })
}

pub fn write_csv_to<W: Write>(data: &Dataset, writer: W, target_name: &str) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = data.schema().names();
    if data.target().is_some() {
        header.push(target_name.to_owned());
    }
    out.write_record(&header)?;
    for (i, row) in data.rows().iter().enumerate() {
        let mut record: Vec<String> = row
            .values()
            .iter()
            .zip(data.schema().features())
            .map(|(&v, f)| match &f.kind {
                FeatureKind::Categorical { vocabulary } => vocabulary[v as usize].clone(),
                _ => v.to_string(),
            })
            .collect();
        if let Some(t) = data.target() {
            record.push(t[i].to_string());
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Summary of one column over the selected rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    /// Present for numeric columns.
    pub mean: Option<f64>,
    /// Present for binary and categorical columns.
    pub mode: Option<f64>,
    pub min: f64,
    pub max: f64,
    /// Rows whose value is not zero (not id 0 for categorical columns).
    pub non_default: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub rows: usize,
    pub columns: Vec<ColumnSummary>,
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Column statistics over the rows selected by `mask` (all rows if `None`).
pub fn compute_stats(data: &Dataset, mask: Option<&[bool]>) -> Result<ColumnStats> {
    if let Some(mask) = mask {
        check_mask(mask, data.len())?;
    }
    let selected: Vec<&Instance> = data
        .rows()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
        .map(|(_, r)| r)
        .collect();
    if selected.is_empty() {
        return Err(Error::Empty("no rows selected for statistics".into()));
    }
    let n = selected.len();
    let columns = data
        .schema()
        .features()
        .iter()
        .enumerate()
        .map(|(j, feature)| {
            let values = selected.iter().map(|r| r.values()[j]);
            let min = values.clone().fold(f64::INFINITY, f64::min);
            let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
            let non_default = values.clone().filter(|&v| v != 0.0).count();
            let (mean, mode) = match feature.kind {
                FeatureKind::Numeric => {
                    let mean = (compensated_sum(values) / n as f64).clamp(min, max);
                    (Some(mean), None)
                }
                _ => (None, Some(mode_of(values))),
            };
            ColumnSummary {
                mean,
                mode,
                min,
                max,
                non_default,
            }
        })
        .collect();
    Ok(ColumnStats { rows: n, columns })
}

/// Most frequent id; ties go to the smallest.
fn mode_of<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut counts: Vec<usize> = Vec::new();
    for v in values {
        let id = v as usize;
        if id >= counts.len() {
            counts.resize(id + 1, 0);
        }
        counts[id] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == best).unwrap_or(0) as f64
}

/// Seeded shuffle into `(train, holdout)` of sizes `⌊n·f⌋` and the rest.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "splitting needs at least 2 rows, got {}",
            data.len()
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (data.len() as f64 * train_fraction).floor() as usize;
    Ok((data.subset(&order[..cut])?, data.subset(&order[cut..])?))
}
