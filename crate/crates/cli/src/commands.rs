use std::fs;
use std::path::{Path, PathBuf};

use auscult_core::embed::{export_embedding, pca_fit_transform, standardize, tsne};
use auscult_core::evaluation::repeated_evaluation_with;
use auscult_core::forest::{predictions_csv, train_forest_with};
use auscult_core::pipeline::{feature_table, load_segments};
use auscult_core::stats::feature_significance_table;
use auscult_core::synth::{generate_synthetic_corpus, recording_name, ANNOTATIONS_FILE, WAV_DIR};
use auscult_core::{
    Error, EvaluationConfig, EvaluationReport, Execution, FeatureTable, Grouping, Label, LabeledDataset,
    RandomForest, Result, SynthConfig, TsneParams, FEATURE_NAMES,
};

use crate::args::*;
use crate::outputs::Outputs;

fn write(outputs: &mut Outputs, path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    outputs.track_overwrite(path);
    fs::write(path, bytes).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn require_both_classes(data: &LabeledDataset) -> Result<()> {
    let counts = data.class_counts();
    match Label::ALL.into_iter().find(|l| counts[l.index()] == 0) {
        Some(missing) => Err(Error::Training(format!(
            "the feature table has no {missing} rows; both classes are required"
        ))),
        None => Ok(()),
    }
}

pub fn extract(args: &ExtractArgs, execution: Execution) -> Result<()> {
    let segments = load_segments(&args.annotations, args.wav.as_deref())?;
    let table = feature_table(&segments, &args.frame.frame(), &args.frame.mel(), execution)?;
    let mut outputs = Outputs::new();
    write(&mut outputs, &args.out, table.to_csv()?)?;
    outputs.commit();
    eprintln!("extracted {} segments into {}", table.len(), args.out.display());
    Ok(())
}

fn label_path(out: &Path, label: Label) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "significance".into(), |s| s.to_string_lossy().into_owned());
    let ext = out.extension().map_or_else(|| "csv".into(), |e| e.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_{label}.{ext}"))
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let table = FeatureTable::read_csv(&args.features)?;
    let grouping = match args.grouping {
        GroupingArg::ByLabel => Grouping::ByLabel,
        GroupingArg::ByConsistencyWithinLabel => Grouping::ByConsistencyWithinLabel,
    };
    let tables = feature_significance_table(&table, grouping)?;
    let mut outputs = Outputs::new();
    for t in &tables {
        let path = match t.within {
            Some(label) => label_path(&args.out, label),
            None => args.out.clone(),
        };
        write(&mut outputs, &path, t.to_csv())?;
        let significant: Vec<&str> = t.significant_features().into_iter().map(|f| FEATURE_NAMES[f]).collect();
        let scope = t.within.map_or_else(|| "normal vs dysphagic".to_string(), |l| format!("within {l}"));
        println!(
            "{scope}: {} significant feature(s){}{}",
            significant.len(),
            if significant.is_empty() { "" } else { ": " },
            significant.join(", ")
        );
    }
    outputs.commit();
    Ok(())
}

pub fn reduce(args: &ReduceArgs) -> Result<()> {
    let table = FeatureTable::read_csv(&args.features)?;
    let data = table.to_dataset();
    let z = standardize(&data.features)?.z;
    let embedding = match args.method {
        MethodArg::Pca => {
            let fit = pca_fit_transform(&z, 2)?;
            if let Some(r) = &fit.embedding.explained_variance_ratio {
                println!("explained variance: PC1 {:.1}%, PC2 {:.1}%", 100.0 * r[0], 100.0 * r[1]);
            }
            fit.embedding
        }
        MethodArg::Tsne => {
            let params = TsneParams {
                perplexity: args.perplexity,
                iterations: args.tsne_iterations,
                learning_rate: args.learning_rate,
                seed: args.seed,
                ..TsneParams::default()
            };
            let fit = tsne(&z, &params)?;
            println!(
                "t-SNE: perplexity {:.3}, KL {:.4} after exaggeration, {:.4} final",
                fit.perplexity, fit.kl_after_exaggeration, fit.kl_final
            );
            fit.embedding
        }
    };
    let mut outputs = Outputs::new();
    outputs.track_overwrite(&args.out);
    export_embedding(&embedding, &data.labels, &data.ids, &args.out)?;
    outputs.commit();
    Ok(())
}

pub fn train(args: &TrainArgs, execution: Execution) -> Result<()> {
    let data = FeatureTable::read_csv(&args.features)?.to_dataset();
    require_both_classes(&data)?;
    let forest = train_forest_with(&data, &args.forest.params(args.seed), execution)?;
    let mut outputs = Outputs::new();
    outputs.track_overwrite(&args.out);
    forest.save(&args.out)?;
    outputs.commit();
    if let Some(acc) = forest.oob_accuracy(&data) {
        println!("out-of-bag accuracy: {:.1}%", 100.0 * acc);
    }
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let forest = RandomForest::load(&args.model)?;
    let data = FeatureTable::read_csv(&args.features)?.to_dataset();
    let predictions = forest.predict_all(&data.features)?;
    let mut outputs = Outputs::new();
    write(&mut outputs, &args.out, predictions_csv(&data.ids, &predictions)?)?;
    outputs.commit();
    let positive = predictions.iter().filter(|p| p.label.is_positive()).count();
    println!("{} of {} segments classified dysphagic", positive, predictions.len());
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs, execution: Execution) -> Result<()> {
    let data = FeatureTable::read_csv(&args.features)?.to_dataset();
    require_both_classes(&data)?;
    let config = EvaluationConfig {
        iterations: args.iterations,
        train_fraction: args.train_fraction,
        forest: args.forest.params(args.seed),
        seed: args.seed,
    };
    let report = repeated_evaluation_with(&data, &config, execution)?;
    let mut outputs = Outputs::new();
    outputs.track_overwrite(&args.out);
    report.write_json(&args.out)?;
    if let Some(path) = &args.summary_csv {
        write(&mut outputs, path, report.summary_csv())?;
    }
    outputs.commit();
    print!("{}", report.summary_table());
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_normal: args.normal,
        n_dysphagic: args.dysphagic,
        sample_rate_hz: args.sample_rate,
        segment_duration_s: args.duration_s,
        separation: args.separation,
        seed: args.seed,
    };
    config.validate()?;
    let mut outputs = Outputs::new();
    outputs.track(&args.out);
    let wav_dir = args.out.join(WAV_DIR);
    outputs.track(&wav_dir);
    for i in 0..config.len() {
        outputs.track_overwrite(wav_dir.join(format!("{}.wav", recording_name(i))));
    }
    outputs.track_overwrite(args.out.join(ANNOTATIONS_FILE));
    let corpus = generate_synthetic_corpus(&config, &args.out)?;
    outputs.commit();
    println!(
        "wrote {} recordings ({} normal, {} dysphagic) and {}",
        corpus.wavs.len(),
        config.n_normal,
        config.n_dysphagic,
        corpus.annotations.display()
    );
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let report = EvaluationReport::read_json(&args.input)?;
    print!("{}", report.summary_table());
    let mut ranked: Vec<(usize, f64)> = report.importance_median.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if !ranked.is_empty() && args.top > 0 {
        println!("Top features by median importance");
        for (j, v) in ranked.into_iter().take(args.top) {
            let name = report.feature_names.get(j).map_or_else(|| format!("feature {}", j + 1), Clone::clone);
            println!("  {name:<16}{:>6.2}%", 100.0 * v);
        }
    }
    Ok(())
}
