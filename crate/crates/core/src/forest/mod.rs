//! Random forest of CART trees with Gini splits and impurity-based feature
//! importance.
//!
//! Tree `i` draws all of its randomness from a generator seeded by
//! `(seed, i)`, so a forest is identical whether its trees are grown
//! serially or in parallel.

mod tree;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tree::{
    best_split, bootstrap_indices, gini_impurity, train_tree, DecisionTree, Node, Split, SplitCandidate,
    MIN_IMPURITY_DECREASE,
};

use crate::audio::Label;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::rng::{derived_rng, stream, Execution};

pub const MODEL_FORMAT: &str = "auscult-random-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn resolved_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
            .clamp(1, n_features.max(1))
    }

    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Config("max_features must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Fraction of trees voting dysphagic.
    pub vote_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

pub fn train_forest(data: &LabeledDataset, params: &ForestParams) -> Result<RandomForest> {
    train_forest_with(data, params, Execution::Parallel)
}

pub fn train_forest_with(
    data: &LabeledDataset,
    params: &ForestParams,
    execution: Execution,
) -> Result<RandomForest> {
    params.validate()?;
    if data.len() < 2 {
        return Err(Error::Training(format!("need at least 2 samples, got {}", data.len())));
    }
    if let Some(missing) = Label::ALL.into_iter().find(|l| data.class_counts()[l.index()] == 0) {
        return Err(Error::Training(format!("no {missing} samples; both classes are required")));
    }
    let grow = |i: usize| {
        let mut rng = derived_rng(params.seed, stream::TREE, i as u64);
        train_tree(data, &mut rng, params)
    };
    let trees = match execution {
        Execution::Serial => (0..params.n_trees).map(grow).collect::<Result<Vec<_>>>()?,
        Execution::Parallel => (0..params.n_trees).into_par_iter().map(grow).collect::<Result<Vec<_>>>()?,
    };
    Ok(RandomForest { params: params.clone(), n_features: data.n_features(), trees })
}

impl RandomForest {
    /// Majority vote; an even vote goes to dysphagic.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let positive = self
            .trees
            .iter()
            .filter(|t| t.predict(x).is_positive())
            .count();
        let n = self.trees.len();
        let label = if 2 * positive >= n { Label::Dysphagic } else { Label::Normal };
        Ok(Prediction { label, vote_fraction: positive as f64 / n as f64 })
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        rows.iter().map(|x| self.predict(x)).collect()
    }

    /// Mean over trees of each tree's normalized impurity decrease,
    /// renormalized to sum 1.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        let mut total = vec![0.0; self.n_features];
        for t in &self.trees {
            for (acc, v) in total.iter_mut().zip(t.importance(self.n_features)) {
                *acc += v;
            }
        }
        let sum: f64 = total.iter().sum();
        if sum <= 0.0 {
            return Err(Error::UndefinedImportance);
        }
        Ok(total.into_iter().map(|v| v / sum).collect())
    }

    /// Accuracy of each training sample under the trees that did not draw it
    /// in their bootstrap sample. `data` must be the training set. Samples
    /// that every tree saw are skipped; `None` if all were.
    pub fn oob_accuracy(&self, data: &LabeledDataset) -> Option<f64> {
        if !self.params.bootstrap {
            return None;
        }
        let n = data.len();
        let mut votes = vec![[0usize; 2]; n];
        for (i, tree) in self.trees.iter().enumerate() {
            let mut rng = derived_rng(self.params.seed, stream::TREE, i as u64);
            let mut in_bag = vec![false; n];
            for r in bootstrap_indices(&mut rng, n) {
                in_bag[r] = true;
            }
            for (r, bagged) in in_bag.iter().enumerate() {
                if !bagged {
                    votes[r][tree.predict(&data.features[r]).index()] += 1;
                }
            }
        }
        let (mut correct, mut counted) = (0, 0);
        for (v, y) in votes.iter().zip(&data.labels) {
            if v[0] + v[1] == 0 {
                continue;
            }
            counted += 1;
            let label = if v[1] >= v[0] { Label::Dysphagic } else { Label::Normal };
            correct += usize::from(label == *y);
        }
        (counted > 0).then(|| correct as f64 / counted as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            forest: self.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model `{}` version {}",
                file.format, file.version
            )));
        }
        let forest = file.forest;
        if forest.trees.is_empty() {
            return Err(Error::Model("forest has no trees".into()));
        }
        for t in &forest.trees {
            t.check(forest.n_features)?;
        }
        Ok(forest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// CSV with columns `segment_id,label,vote_fraction`.
pub fn predictions_csv(ids: &[String], predictions: &[Prediction]) -> Result<String> {
    if ids.len() != predictions.len() {
        return Err(Error::Shape(format!("{} ids for {} predictions", ids.len(), predictions.len())));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Model(e.to_string());
    w.write_record(["segment_id", "label", "vote_fraction"]).map_err(err)?;
    for (id, p) in ids.iter().zip(predictions) {
        w.write_record([id.as_str(), p.label.as_str(), &sig9(p.vote_fraction)]).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Model(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Inverse of [`predictions_csv`].
pub fn parse_predictions_csv(text: &str) -> Result<(Vec<String>, Vec<Prediction>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if !r.headers().is_ok_and(|h| h.iter().eq(["segment_id", "label", "vote_fraction"])) {
        return Err(Error::Parse { line: 1, message: "expected header `segment_id,label,vote_fraction`".into() });
    }
    let mut ids = Vec::new();
    let mut predictions = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let label = rec[1]
            .parse()
            .map_err(|_| Error::Vocabulary { line, field: "label", token: rec[1].to_string() })?;
        let vote_fraction = rec[2]
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("`{}` is not a number", &rec[2]) })?;
        ids.push(rec[0].to_string());
        predictions.push(Prediction { label, vote_fraction });
    }
    Ok((ids, predictions))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    forest: RandomForest,
}
