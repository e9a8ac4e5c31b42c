//! Two-dimensional views of the feature space: PCA and exact t-SNE.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::Label;
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::rng::Rng;

const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub z: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    /// Population standard deviations; near-constant columns record 1.
    pub stds: Vec<f64>,
}

/// Column-wise z-scores using the population standard deviation. Columns
/// with a standard deviation below 1e-12 are only centred.
pub fn standardize(x: &[Vec<f64>]) -> Result<Standardized> {
    if x.len() < 2 {
        return Err(Error::Dimension(format!("need at least 2 rows, got {}", x.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("rows differ in length".into()));
    }
    let n = x.len() as f64;
    let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let stds: Vec<f64> = (0..d)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd < STD_FLOOR { 1.0 } else { sd }
        })
        .collect();
    let z = x
        .iter()
        .map(|r| (0..d).map(|j| (r[j] - means[j]) / stds[j]).collect())
        .collect();
    Ok(Standardized { z, means, stds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMethod {
    Pca,
    Tsne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub points: Vec<Vec<f64>>,
    pub method: EmbeddingMethod,
    /// PCA only.
    pub explained_variance_ratio: Option<Vec<f64>>,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub embedding: Embedding,
    /// Unit-length principal axes, one row per kept component.
    pub components: Vec<Vec<f64>>,
    /// All covariance eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Projects onto the top `k` eigenvectors of the sample covariance. Each
/// axis is oriented so that its largest-magnitude coordinate is positive.
pub fn pca_fit_transform(z: &[Vec<f64>], k: usize) -> Result<PcaFit> {
    let n = z.len();
    let d = z.first().map_or(0, Vec::len);
    if n < 2 || k == 0 || k > (n - 1).min(d) {
        return Err(Error::Dimension(format!(
            "cannot keep {k} components from {n} samples of dimension {d}"
        )));
    }
    if z.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("rows differ in length".into()));
    }

    let mean: Vec<f64> = (0..d).map(|j| z.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centred = DMatrix::from_fn(n, d, |i, j| z[i][j] - mean[j]);
    let cov = (centred.transpose() * &centred) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let trace: f64 = eigenvalues.iter().sum();

    let components: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let pivot = v
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    let points = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| c.iter().enumerate().map(|(j, w)| w * centred[(i, j)]).sum())
                .collect()
        })
        .collect();
    let ratios = eigenvalues[..k]
        .iter()
        .map(|&l| if trace > 0.0 { l / trace } else { 0.0 })
        .collect();

    Ok(PcaFit {
        embedding: Embedding {
            points,
            method: EmbeddingMethod::Pca,
            explained_variance_ratio: Some(ratios),
        },
        components,
        eigenvalues,
        mean,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    /// Capped at `(n - 1) / 3` for small inputs.
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 42,
        }
    }
}

const PERPLEXITY_TOL: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 50;
const INIT_STD: f64 = 1e-2;
const MIN_GAIN: f64 = 0.01;

fn squared_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b).powi(2)).sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Row-stochastic Gaussian affinities `p(j|i)` (row-major `n * n`), each
/// row's precision found by bisection so its perplexity matches.
pub fn conditional_affinities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let dist = squared_distances(x);
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    p.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let d = &dist[i * n..(i + 1) * n];
        let d_min = (0..n).filter(|&j| j != i).map(|j| d[j]).fold(f64::INFINITY, f64::min);
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        for _ in 0..MAX_BISECTION_STEPS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let shifted = d[j] - d_min;
                let w = (-beta * shifted).exp();
                row[j] = w;
                sum += w;
                weighted += shifted * w;
            }
            let entropy = sum.ln() + beta * weighted / sum;
            for v in row.iter_mut() {
                *v /= sum;
            }
            let diff = entropy - target;
            if diff.abs() < PERPLEXITY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        row[i] = 0.0;
    });
    p
}

/// Symmetrized joint affinities `(p(j|i) + p(i|j)) / 2n`, summing to 1.
pub fn joint_affinities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let cond = conditional_affinities(x, perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64);
        }
    }
    p
}

/// Student-t kernel values `1 / (1 + |yi - yj|^2)` (zero diagonal) and
/// their total. Rows are summed separately and then in order, so the result
/// is independent of thread scheduling.
fn student_kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let row_sums: Vec<f64> = num
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| {
            let mut s = 0.0;
            for j in 0..n {
                if j != i {
                    let dx = y[i][0] - y[j][0];
                    let dy = y[i][1] - y[j][1];
                    row[j] = 1.0 / (1.0 + dx * dx + dy * dy);
                    s += row[j];
                }
            }
            s
        })
        .collect();
    let total = row_sums.iter().sum();
    (num, total)
}

/// KL(P || Q) of a layout against joint affinities `p`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let (num, total) = student_kernel(y);
    p.iter()
        .zip(&num)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &w)| p * (p / (w / total).max(f64::MIN_POSITIVE)).ln())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneFit {
    pub embedding: Embedding,
    pub perplexity: f64,
    /// KL divergence when early exaggeration is switched off.
    pub kl_after_exaggeration: f64,
    pub kl_final: f64,
}

/// Exact t-SNE into two dimensions.
pub fn tsne(x: &[Vec<f64>], params: &TsneParams) -> Result<TsneFit> {
    let n = x.len();
    if n < 4 {
        return Err(Error::Dimension(format!("t-SNE needs at least 4 samples, got {n}")));
    }
    if !(params.perplexity > 0.0) || params.perplexity >= n as f64 {
        return Err(Error::Config(format!(
            "perplexity {} must lie in (0, {n})",
            params.perplexity
        )));
    }
    if x.iter().any(|r| r.len() != x[0].len()) {
        return Err(Error::Shape("rows differ in length".into()));
    }
    let perplexity = params.perplexity.min((n as f64 - 1.0) / 3.0);
    let p = joint_affinities(x, perplexity);

    let mut rng = Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut grad = vec![[0.0; 2]; n];
    let mut kl_after_exaggeration = f64::NAN;

    for iter in 0..params.iterations {
        let exaggeration = if iter < params.exaggeration_iterations { params.early_exaggeration } else { 1.0 };
        if iter == params.exaggeration_iterations {
            kl_after_exaggeration = kl_divergence(&p, &y);
        }
        let momentum = if iter < params.momentum_switch { params.initial_momentum } else { params.final_momentum };

        let (num, total) = student_kernel(&y);
        grad.par_iter_mut().enumerate().for_each(|(i, g)| {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                let w = num[i * n + j];
                let force = (exaggeration * p[i * n + j] - w / total) * w;
                gx += force * (y[i][0] - y[j][0]);
                gy += force * (y[i][1] - y[j][1]);
            }
            *g = [4.0 * gx, 4.0 * gy];
        });

        for i in 0..n {
            for c in 0..2 {
                let same_sign = (grad[i][c] > 0.0) == (update[i][c] > 0.0);
                let gain = if same_sign { gains[i][c] * 0.8 } else { gains[i][c] + 0.2 };
                gains[i][c] = f64::max(gain, MIN_GAIN);
                update[i][c] = momentum * update[i][c] - params.learning_rate * gains[i][c] * grad[i][c];
                y[i][c] += update[i][c];
            }
        }
        for c in 0..2 {
            let mean = y.iter().map(|p| p[c]).sum::<f64>() / n as f64;
            y.iter_mut().for_each(|p| p[c] -= mean);
        }
    }
    if kl_after_exaggeration.is_nan() {
        kl_after_exaggeration = kl_divergence(&p, &y);
    }

    Ok(TsneFit {
        kl_final: kl_divergence(&p, &y),
        kl_after_exaggeration,
        perplexity,
        embedding: Embedding {
            points: y.into_iter().map(|p| p.to_vec()).collect(),
            method: EmbeddingMethod::Tsne,
            explained_variance_ratio: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub x: f64,
    pub y: f64,
    pub label: Label,
    pub segment_id: String,
}

/// CSV with columns `x,y,label,segment_id`.
pub fn embedding_csv(embedding: &Embedding, labels: &[Label], ids: &[String]) -> Result<String> {
    let n = embedding.points.len();
    if labels.len() != n || ids.len() != n {
        return Err(Error::Shape(format!(
            "{n} points but {} labels and {} ids",
            labels.len(),
            ids.len()
        )));
    }
    if n > 0 && embedding.dims() != 2 {
        return Err(Error::Shape(format!("expected 2-D points, got {}-D", embedding.dims())));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Model(e.to_string());
    w.write_record(["x", "y", "label", "segment_id"]).map_err(err)?;
    for ((p, l), id) in embedding.points.iter().zip(labels).zip(ids) {
        w.write_record([sig9(p[0]), sig9(p[1]), l.to_string(), id.clone()]).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Model(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn export_embedding(
    embedding: &Embedding,
    labels: &[Label],
    ids: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, embedding_csv(embedding, labels, ids)?).map_err(|e| Error::io(path, e))
}

pub fn parse_embedding_csv(text: &str) -> Result<Vec<EmbeddedPoint>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header_ok = r
        .headers()
        .map(|h| h.iter().eq(["x", "y", "label", "segment_id"]))
        .unwrap_or(false);
    if !header_ok {
        return Err(Error::Parse { line: 1, message: "expected header `x,y,label,segment_id`".into() });
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize| {
                rec[i].parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{}` is not a number", &rec[i]),
                })
            };
            Ok(EmbeddedPoint {
                x: num(0)?,
                y: num(1)?,
                label: rec[2].parse().map_err(|_| Error::Vocabulary {
                    line,
                    field: "label",
                    token: rec[2].to_string(),
                })?,
                segment_id: rec[3].to_string(),
            })
        })
        .collect()
}

/// Writes a human-readable note of the PCA variance ratios.
pub fn describe_variance(embedding: &Embedding) -> String {
    let mut s = String::new();
    if let Some(r) = &embedding.explained_variance_ratio {
        for (i, v) in r.iter().enumerate() {
            let _ = writeln!(s, "PC{}: {:.2}% of variance", i + 1, 100.0 * v);
        }
    }
    s
}
