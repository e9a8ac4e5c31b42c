//! Acoustic analysis and classification of swallow sounds.
//!
//! The pipeline runs from annotated WAV recordings to per-swallow feature
//! vectors, nonparametric group statistics, 2-D embeddings, a random forest
//! classifier and a repeated split evaluation harness. A synthetic corpus
//! generator stands in for clinical recordings when exercising the pipeline.

pub mod audio;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod format;
pub mod forest;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synth;

pub use audio::{AudioSegment, AudioSignal, Consistency, Label, SegmentAnnotation};
pub use dataset::{FeatureRow, FeatureTable, LabeledDataset};
pub use embed::{Embedding, EmbeddingMethod, TsneParams};
pub use error::{Error, ErrorCategory, Result};
pub use evaluation::{ConfusionMatrix, EvaluationConfig, EvaluationReport, Metrics};
pub use features::{FeatureVector, FrameConfig, MelConfig, Window, FEATURE_COUNT, FEATURE_NAMES};
pub use forest::{DecisionTree, ForestParams, Prediction, RandomForest};
pub use rng::Execution;
pub use stats::{Grouping, KruskalResult, SignificanceRow, SignificanceTable};
pub use synth::SynthConfig;
