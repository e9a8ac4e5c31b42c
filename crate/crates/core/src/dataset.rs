//! Feature tables and labeled datasets, plus the feature-matrix CSV format.

use std::fs;
use std::path::Path;

use crate::audio::{Consistency, Label};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::format::sig9;

pub const METADATA_COLUMNS: [&str; 4] = ["segment_id", "label", "consistency", "subject_id"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub segment_id: String,
    pub label: Label,
    pub consistency: Consistency,
    pub subject_id: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features.get(feature)).collect()
    }

    pub fn to_dataset(&self) -> LabeledDataset {
        LabeledDataset {
            features: self.rows.iter().map(|r| r.features.0.to_vec()).collect(),
            labels: self.rows.iter().map(|r| r.label).collect(),
            ids: self.rows.iter().map(|r| r.segment_id.clone()).collect(),
        }
    }

    pub fn header() -> Vec<&'static str> {
        METADATA_COLUMNS.iter().chain(FEATURE_NAMES.iter()).copied().collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header()).map_err(csv_error)?;
        for r in &self.rows {
            let mut record = vec![
                r.segment_id.clone(),
                r.label.to_string(),
                r.consistency.to_string(),
                r.subject_id.clone(),
            ];
            record.extend(r.features.0.iter().map(|&v| sig9(v)));
            w.write_record(&record).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| Error::Model(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&bytes)
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let header = r.headers().map_err(csv_error)?.clone();
        if header.iter().ne(Self::header()) {
            return Err(Error::Parse {
                line: 1,
                message: "feature CSV header does not match the expected columns".into(),
            });
        }
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| record.get(i).unwrap_or_default();
            let label = field(1).parse().map_err(|_| Error::Vocabulary {
                line,
                field: "label",
                token: field(1).into(),
            })?;
            let consistency = field(2).parse().map_err(|_| Error::Vocabulary {
                line,
                field: "consistency",
                token: field(2).into(),
            })?;
            let mut values = [0.0; FEATURE_COUNT];
            for (i, v) in values.iter_mut().enumerate() {
                let token = field(4 + i);
                *v = token.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    Error::Parse {
                        line,
                        message: format!("{}: `{token}` is not a finite number", FEATURE_NAMES[i]),
                    }
                })?;
            }
            rows.push(FeatureRow {
                segment_id: field(0).into(),
                label,
                consistency,
                subject_id: field(3).into(),
                features: FeatureVector(values),
            });
        }
        Ok(Self { rows })
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

/// Row-major feature matrix with binary labels. The column count is not
/// fixed to the 25 acoustic features so small fixtures can be used too.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<Label>, ids: Vec<String>) -> Result<Self> {
        if features.len() != labels.len() || features.len() != ids.len() {
            return Err(Error::Shape(format!(
                "{} feature rows, {} labels, {} ids",
                features.len(),
                labels.len(),
                ids.len()
            )));
        }
        let width = features.first().map_or(0, Vec::len);
        for (i, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Shape(format!("row {i} has {} columns, expected {width}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("row {i} has a non-finite feature")));
            }
        }
        Ok(Self { features, labels, ids })
    }

    /// Dataset with generated ids `0..n`.
    pub fn unnamed(features: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let ids = (0..labels.len()).map(|i| i.to_string()).collect();
        Self::new(features, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}
