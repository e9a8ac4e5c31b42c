use std::fs;
use std::path::Path;

use auscult_core::evaluation::repeated_evaluation;
use auscult_core::features::index;
use auscult_core::pipeline::{feature_table, load_segments};
use auscult_core::stats::feature_significance_table;
use auscult_core::synth::{generate_synthetic_corpus, synthesize_segments, ANNOTATIONS_FILE};
use auscult_core::{
    EvaluationConfig, Execution, FeatureTable, FrameConfig, Grouping, Label, MelConfig, SynthConfig, FEATURE_COUNT,
};

fn features(config: &SynthConfig) -> FeatureTable {
    let segments = synthesize_segments(config).unwrap();
    feature_table(&segments, &FrameConfig::default(), &MelConfig::default(), Execution::Parallel).unwrap()
}

fn p_values(table: &FeatureTable) -> Vec<f64> {
    feature_significance_table(table, Grouping::ByLabel).unwrap()[0].rows.iter().map(|r| r.p).collect()
}

#[test]
fn zero_separation_is_a_null_corpus() {
    let mut flagged = 0;
    for seed in 0..20 {
        let table = features(&SynthConfig { separation: 0.0, seed, ..SynthConfig::default() });
        flagged += p_values(&table).iter().filter(|&&p| p < 0.05).count();
    }
    let rate = flagged as f64 / (20 * FEATURE_COUNT) as f64;
    assert!(rate <= 0.12, "null flag rate {rate}");
}

#[test]
fn unit_separation_moves_crest_and_zcr() {
    let mut both = 0;
    for seed in 0..20 {
        let p = p_values(&features(&SynthConfig { seed, ..SynthConfig::default() }));
        both += usize::from(p[index::CREST] < 0.05 && p[index::ZCR] < 0.05);
    }
    assert!(both >= 19, "crest and zcr significant in {both}/20 seeds");
}

#[test]
fn accuracy_grows_with_separation() {
    let accuracy = |separation: f64| {
        (0..10)
            .map(|seed| {
                let data = features(&SynthConfig { separation, seed, ..SynthConfig::default() }).to_dataset();
                repeated_evaluation(&data, &EvaluationConfig { seed, ..EvaluationConfig::default() })
                    .unwrap()
                    .aggregate
                    .accuracy
                    .mean
            })
            .sum::<f64>()
            / 10.0
    };
    let curve: Vec<f64> = [0.0, 0.5, 1.0, 2.0].map(accuracy).to_vec();
    assert!(curve.windows(2).all(|w| w[1] >= w[0]), "accuracy by separation {curve:?}");
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("wav")] {
        for e in fs::read_dir(&sub).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn same_config_writes_identical_bytes() {
    let config = SynthConfig { n_normal: 6, n_dysphagic: 5, seed: 12, ..SynthConfig::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_synthetic_corpus(&config, a.path()).unwrap();
    generate_synthetic_corpus(&config, b.path()).unwrap();
    let files = tree_bytes(a.path());
    assert_eq!(files.len(), 12);
    assert_eq!(files, tree_bytes(b.path()));

    let c = tempfile::tempdir().unwrap();
    generate_synthetic_corpus(&SynthConfig { seed: 13, ..config }, c.path()).unwrap();
    assert_ne!(files, tree_bytes(c.path()));
}

#[test]
fn corpus_on_disk_matches_the_in_memory_segments() {
    let config = SynthConfig { n_normal: 8, n_dysphagic: 8, seed: 4, ..SynthConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic_corpus(&config, dir.path()).unwrap();
    let loaded = load_segments(dir.path().join(ANNOTATIONS_FILE), None).unwrap();
    let memory = synthesize_segments(&config).unwrap();
    assert_eq!(loaded.len(), 16);
    for (a, b) in loaded.iter().zip(&memory) {
        assert_eq!(a.annotation.label, b.annotation.label);
        assert_eq!(a.annotation.subject_id, b.annotation.subject_id);
        assert_eq!(a.samples.len(), b.samples.len());
        // PCM16 storage costs at most one quantization step.
        assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| (x - y).abs() <= 1.0 / 32768.0));
    }
    assert_eq!(loaded.iter().filter(|s| s.annotation.label == Label::Dysphagic).count(), 8);
}

#[test]
fn generated_audio_never_clips() {
    for separation in [0.0, 1.0, 3.0] {
        let segments = synthesize_segments(&SynthConfig { separation, seed: 2, ..SynthConfig::default() }).unwrap();
        assert!(segments.iter().flat_map(|s| &s.samples).all(|x| x.abs() <= 1.0));
    }
}
