//! Repeated stratified train/test evaluation of the random forest.
//!
//! Each iteration splits the data with its own derived generator, trains a
//! forest with its own derived seed, and records the confusion matrix,
//! metrics and feature importances on the held-out part. Metrics aggregate
//! as mean and sample standard deviation; importances aggregate as the
//! per-feature median.
//!
//! Splits are made per swallow, not per subject, so swallows from one
//! subject can land on both sides of a split.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::Label;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::forest::{train_forest_with, ForestParams};
use crate::format::sig9;
use crate::rng::{derive_seed, derived_rng, stream, Execution, Rng};

/// Disjoint row indices of a split, each in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles each class separately and puts `round(class size * fraction)`
/// of it in the training part.
pub fn stratified_split_indices(
    labels: &[Label],
    train_fraction: f64,
    rng: &mut Rng,
) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let n_train = (members.len() as f64 * train_fraction).round() as usize;
        if members.len() < 2 || n_train == 0 || n_train == members.len() {
            return Err(Error::Stratification(format!(
                "{} {class} samples cannot be split {train_fraction}/{} with both parts non-empty",
                members.len(),
                1.0 - train_fraction
            )));
        }
        members.shuffle(rng);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn stratified_split(
    data: &LabeledDataset,
    train_fraction: f64,
    rng: &mut Rng,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let s = stratified_split_indices(&data.labels, train_fraction, rng)?;
    Ok((data.subset(&s.train), data.subset(&s.test)))
}

/// Dysphagic is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

pub fn confusion(predictions: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predictions.iter().zip(truth) {
        match (p.is_positive(), t.is_positive()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Standard rates of a confusion matrix; any 0/0 is taken as 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::Domain("metrics of an empty confusion matrix".into()));
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let sensitivity = ratio(cm.tp, cm.positives());
    let f1 = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    };
    Ok(Metrics {
        precision,
        sensitivity,
        specificity: ratio(cm.tn, cm.negatives()),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub iterations: usize,
    pub train_fraction: f64,
    /// Forest settings; the seed is replaced by a per-iteration derived seed.
    pub forest: ForestParams,
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            iterations: 11,
            train_fraction: 0.6,
            forest: ForestParams::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Mean and sample (n - 1) standard deviation; the SD of a single value
    /// is 0.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, sd }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub forest_seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub importance: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub precision: MeanSd,
    pub sensitivity: MeanSd,
    pub specificity: MeanSd,
    pub accuracy: MeanSd,
    pub f1: MeanSd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionAggregate {
    pub tp: MeanSd,
    pub fp: MeanSd,
    #[serde(rename = "fn")]
    pub fn_: MeanSd,
    pub tn: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: EvaluationConfig,
    pub iterations: Vec<IterationRecord>,
    pub aggregate: MetricAggregate,
    pub confusion_mean_sd: ConfusionAggregate,
    pub importance_median: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_names: Vec<String>,
}

fn run_iteration(data: &LabeledDataset, config: &EvaluationConfig, i: usize, execution: Execution) -> Result<IterationRecord> {
    let mut rng = derived_rng(config.seed, stream::SPLIT, i as u64);
    let split = stratified_split_indices(&data.labels, config.train_fraction, &mut rng)?;
    let (train, test) = (data.subset(&split.train), data.subset(&split.test));

    let forest_seed = derive_seed(config.seed, stream::FOREST, i as u64);
    let params = ForestParams { seed: forest_seed, ..config.forest.clone() };
    let forest = train_forest_with(&train, &params, execution)?;

    let predicted: Vec<Label> = forest
        .predict_all(&test.features)?
        .into_iter()
        .map(|p| p.label)
        .collect();
    let cm = confusion(&predicted, &test.labels)?;
    Ok(IterationRecord {
        iteration: i,
        forest_seed,
        train_size: train.len(),
        test_size: test.len(),
        confusion: cm,
        metrics: metrics(&cm)?,
        importance: forest.feature_importance()?,
    })
}

pub fn repeated_evaluation(data: &LabeledDataset, config: &EvaluationConfig) -> Result<EvaluationReport> {
    repeated_evaluation_with(data, config, Execution::Parallel)
}

pub fn repeated_evaluation_with(
    data: &LabeledDataset,
    config: &EvaluationConfig,
    execution: Execution,
) -> Result<EvaluationReport> {
    if config.iterations == 0 {
        return Err(Error::Config("at least one iteration is required".into()));
    }
    let run = |i: usize| {
        run_iteration(data, config, i, execution)
            .map_err(|e| Error::Iteration { iteration: i, source: Box::new(e) })
    };
    let iterations: Vec<IterationRecord> = match execution {
        Execution::Serial => (0..config.iterations).map(run).collect::<Result<_>>()?,
        Execution::Parallel => (0..config.iterations).into_par_iter().map(run).collect::<Result<_>>()?,
    };

    let metric = |f: fn(&Metrics) -> f64| {
        MeanSd::of(&iterations.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let cell = |f: fn(&ConfusionMatrix) -> usize| {
        MeanSd::of(&iterations.iter().map(|r| f(&r.confusion) as f64).collect::<Vec<_>>())
    };
    let n_features = data.n_features();
    let importance_median = (0..n_features)
        .map(|j| median(&iterations.iter().map(|r| r.importance[j]).collect::<Vec<_>>()))
        .collect();
    let feature_names = if n_features == crate::features::FEATURE_COUNT {
        crate::features::FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        Vec::new()
    };

    Ok(EvaluationReport {
        config: config.clone(),
        aggregate: MetricAggregate {
            precision: metric(|m| m.precision),
            sensitivity: metric(|m| m.sensitivity),
            specificity: metric(|m| m.specificity),
            accuracy: metric(|m| m.accuracy),
            f1: metric(|m| m.f1),
        },
        confusion_mean_sd: ConfusionAggregate {
            tp: cell(|c| c.tp),
            fp: cell(|c| c.fp),
            fn_: cell(|c| c.fn_),
            tn: cell(|c| c.tn),
        },
        iterations,
        importance_median,
        feature_names,
    })
}

/// Attribute rows of the classification summary, in display order.
pub const SUMMARY_ATTRIBUTES: [&str; 9] = [
    "True Positives",
    "False Positives",
    "False Negatives",
    "True Negatives",
    "Precision (%)",
    "Sensitivity (%)",
    "Specificity (%)",
    "Accuracy (%)",
    "F1 Score (%)",
];

impl EvaluationReport {
    /// `(attribute, mean, sd)` with rates in percent.
    pub fn summary_rows(&self) -> Vec<(&'static str, f64, f64)> {
        let c = &self.confusion_mean_sd;
        let a = &self.aggregate;
        let cells = [c.tp, c.fp, c.fn_, c.tn].map(|m| (m.mean, m.sd));
        let rates = [a.precision, a.sensitivity, a.specificity, a.accuracy, a.f1]
            .map(|m| (100.0 * m.mean, 100.0 * m.sd));
        SUMMARY_ATTRIBUTES
            .iter()
            .zip(cells.iter().chain(rates.iter()))
            .map(|(name, &(mean, sd))| (*name, mean, sd))
            .collect()
    }

    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "Dysphagic classification over {} iterations (mean ± SD)\n",
            self.iterations.len()
        );
        for (i, (name, mean, sd)) in self.summary_rows().into_iter().enumerate() {
            let unit = if i < 4 { "" } else { " %" };
            let _ = writeln!(out, "{name:<18}{mean:>7.1} ± {sd:.1}{unit}");
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("attribute,mean,sd\n");
        for (name, mean, sd) in self.summary_rows() {
            let _ = writeln!(out, "{name},{},{}", sig9(mean), sig9(sd));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Model(e.to_string()))
    }
}
