//! Glue from annotation files to feature tables.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::audio::{parse_annotations, read_wav, slice_segments, AudioSegment, AudioSignal, SegmentAnnotation};
use crate::dataset::{FeatureRow, FeatureTable};
use crate::error::{Error, Result};
use crate::features::{extract_all, FrameConfig, MelConfig};
use crate::rng::Execution;

fn recording_path(annotation: &SegmentAnnotation, base: &Path, fallback: Option<&Path>) -> Result<PathBuf> {
    match (&annotation.wav, fallback) {
        (Some(w), _) => Ok(base.join(w)),
        (None, Some(f)) => Ok(f.to_path_buf()),
        (None, None) => Err(Error::Config(
            "annotation has no `wav` column and no recording was given".into(),
        )),
    }
}

/// Reads the annotations and cuts every segment out of its recording.
/// `wav` entries are resolved against the annotation file's directory;
/// rows without one use `recording`.
pub fn load_segments(annotations: impl AsRef<Path>, recording: Option<&Path>) -> Result<Vec<AudioSegment>> {
    let annotations = annotations.as_ref();
    let rows = parse_annotations(annotations)?;
    let base = annotations.parent().unwrap_or_else(|| Path::new(""));
    let mut cache: HashMap<PathBuf, AudioSignal> = HashMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        let path = recording_path(row, base, recording)?;
        if !cache.contains_key(&path) {
            let signal = read_wav(&path)?;
            cache.insert(path.clone(), signal);
        }
        let segment = slice_segments(&cache[&path], std::slice::from_ref(row)).map_err(|e| match e {
            Error::SegmentOutOfRange { start_s, end_s, duration_s, .. } => {
                Error::SegmentOutOfRange { index, start_s, end_s, duration_s }
            }
            other => other,
        })?;
        out.extend(segment);
    }
    Ok(out)
}

/// Stable identifiers: the recording's file stem when it holds a single
/// segment, `stem#k` (1-based) otherwise. Rows without a recording name use
/// `segment#row`.
pub fn segment_ids(annotations: &[SegmentAnnotation]) -> Vec<String> {
    let stem = |a: &SegmentAnnotation| {
        a.wav.as_ref().map(|w| {
            Path::new(w).file_stem().map_or_else(|| w.clone(), |s| s.to_string_lossy().into_owned())
        })
    };
    let mut totals: HashMap<String, usize> = HashMap::new();
    for a in annotations {
        if let Some(s) = stem(a) {
            *totals.entry(s).or_default() += 1;
        }
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    annotations
        .iter()
        .enumerate()
        .map(|(row, a)| match stem(a) {
            Some(s) if totals[&s] == 1 => s,
            Some(s) => {
                let k = seen.entry(s.clone()).or_default();
                *k += 1;
                format!("{s}#{k}")
            }
            None => format!("segment#{}", row + 1),
        })
        .collect()
}

/// Feature table in segment order.
pub fn feature_table(
    segments: &[AudioSegment],
    frame: &FrameConfig,
    mel: &MelConfig,
    execution: Execution,
) -> Result<FeatureTable> {
    let vectors = extract_all(segments, frame, mel, execution)?;
    let annotations: Vec<SegmentAnnotation> = segments.iter().map(|s| s.annotation.clone()).collect();
    let rows = segments
        .iter()
        .zip(vectors)
        .zip(segment_ids(&annotations))
        .map(|((s, features), segment_id)| FeatureRow {
            segment_id,
            label: s.annotation.label,
            consistency: s.annotation.consistency,
            subject_id: s.annotation.subject_id.clone(),
            features,
        })
        .collect();
    Ok(FeatureTable { rows })
}
