mod common;

use std::fs;

use auscult_core::embed::parse_embedding_csv;
use auscult_core::forest::parse_predictions_csv;
use auscult_core::{EvaluationReport, FeatureTable, RandomForest, SignificanceTable};
use common::*;

const SUBCOMMANDS: [&str; 8] = ["extract", "stats", "reduce", "train", "predict", "evaluate", "synth", "report"];

#[test]
fn help_documents_flags_and_defaults() {
    assert_eq!(code(&run(&["--help"])), 0);
    for sub in SUBCOMMANDS {
        let out = run(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        let text = stdout(&out);
        assert!(text.contains("Usage:") && text.contains("--"), "{sub}: {text}");
    }
    let evaluate = stdout(&run(&["evaluate", "--help"]));
    for flag in ["--iterations", "[default: 11]", "--train-fraction", "[default: 0.6]", "--trees", "[default: 100]"] {
        assert!(evaluate.contains(flag), "missing {flag}");
    }
    let extract = stdout(&run(&["extract", "--help"]));
    for flag in ["--frame-len-s", "[default: 0.025]", "--hop-s", "[default: 0.01]", "--mel-filters", "[default: 20]"] {
        assert!(extract.contains(flag), "missing {flag}");
    }
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["no-such-command"])), 64);
    assert_eq!(code(&run(&["evaluate"])), 64);
    assert_eq!(code(&run(&["reduce", "--features", "x.csv", "--out", "y.csv", "--method", "umap"])), 64);
}

#[test]
fn failures_map_to_exit_codes_and_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");

    let missing = run(&["stats", "--features", &p(&dir.path().join("absent.csv")), "--out", &p(&out)]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).starts_with("error: "));

    let garbage = dir.path().join("garbage.csv");
    fs::write(&garbage, "not,a,feature,table\n1,2,3,4\n").unwrap();
    assert_eq!(code(&run(&["stats", "--features", &p(&garbage), "--out", &p(&out)])), 3);

    // One annotation runs past the end of its recording.
    let corpus = dir.path().join("c");
    ok(&["synth", "--out", &p(&corpus), "--normal", "2", "--dysphagic", "2"]);
    let annotations = corpus.join("annotations.csv");
    let mut text = fs::read_to_string(&annotations).unwrap();
    text = text.replacen("0,1,", "0,1.5,", 1);
    fs::write(&annotations, text).unwrap();
    let failed = run(&["extract", "--annotations", &p(&annotations), "--out", &p(&out)]);
    assert_eq!(code(&failed), 4, "{}", stderr(&failed));
    assert!(!out.exists(), "partial output left behind");
}

#[test]
fn single_class_training_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let features = corpus_features(dir.path(), 6, 6, 1.0, 3);
    let text = fs::read_to_string(&features).unwrap();
    let normal_only: String = text.lines().filter(|l| !l.contains(",dysphagic,")).map(|l| format!("{l}\n")).collect();
    let one_class = dir.path().join("normal.csv");
    fs::write(&one_class, normal_only).unwrap();
    let report = dir.path().join("report.json");
    let out = run(&["evaluate", "--features", &p(&one_class), "--out", &p(&report)]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("dysphagic"));
    assert!(!report.exists());
    assert_eq!(code(&run(&["train", "--features", &p(&one_class), "--out", &p(&dir.path().join("m.json"))])), 4);
}

#[test]
fn full_workflow_produces_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let features = corpus_features(d, 20, 16, 1.0, 7);
    let table = FeatureTable::read_csv(&features).unwrap();
    assert_eq!(table.len(), 36);
    let header = fs::read_to_string(&features).unwrap().lines().next().unwrap().split(',').count();
    assert_eq!(header, 29);

    let sig = d.join("sig.csv");
    ok(&["stats", "--features", &p(&features), "--out", &p(&sig)]);
    let sig_table = SignificanceTable::from_csv(&fs::read_to_string(&sig).unwrap(), None).unwrap();
    assert_eq!(sig_table.rows.len(), 25);
    ok(&["stats", "--features", &p(&features), "--grouping", "by-consistency-within-label", "--out", &p(&sig)]);
    assert!(d.join("sig_normal.csv").exists() && d.join("sig_dysphagic.csv").exists());

    for method in ["pca", "tsne"] {
        let emb = d.join(format!("{method}.csv"));
        ok(&["reduce", "--features", &p(&features), "--method", method, "--out", &p(&emb)]);
        let points = parse_embedding_csv(&fs::read_to_string(&emb).unwrap()).unwrap();
        assert_eq!(points.len(), 36);
        assert!(points.iter().all(|q| q.x.is_finite() && q.y.is_finite()));
    }

    let model = d.join("model.json");
    assert!(ok(&["train", "--features", &p(&features), "--out", &p(&model), "--trees", "25"]).contains("out-of-bag"));
    RandomForest::load(&model).unwrap();
    let preds = d.join("pred.csv");
    ok(&["predict", "--model", &p(&model), "--features", &p(&features), "--out", &p(&preds)]);
    let (ids, predictions) = parse_predictions_csv(&fs::read_to_string(&preds).unwrap()).unwrap();
    assert_eq!(ids.len(), 36);
    assert!(predictions.iter().all(|q| (0.0..=1.0).contains(&q.vote_fraction)));

    let report = d.join("report.json");
    let summary = d.join("summary.csv");
    let table_text = ok(&[
        "evaluate", "--features", &p(&features), "--out", &p(&report), "--summary-csv", &p(&summary), "--iterations", "5",
    ]);
    assert!(table_text.contains("Accuracy"));
    let parsed = EvaluationReport::read_json(&report).unwrap();
    assert_eq!(parsed.iterations.len(), 5);
    assert_eq!(fs::read_to_string(&summary).unwrap().lines().count(), 10);
    let printed = ok(&["report", "--input", &p(&report), "--top", "3"]);
    assert!(printed.contains("Top features"));
}

#[test]
fn reruns_and_schedules_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let features = corpus_features(d, 10, 10, 1.0, 21);
    let again = d.join("again.csv");
    let serial = d.join("serial.csv");
    let annotations = d.join("corpus_21_1").join("annotations.csv");
    ok(&["extract", "--annotations", &p(&annotations), "--out", &p(&again)]);
    ok(&["--serial", "extract", "--annotations", &p(&annotations), "--out", &p(&serial)]);
    let first = fs::read(&features).unwrap();
    assert_eq!(first, fs::read(&again).unwrap());
    assert_eq!(first, fs::read(&serial).unwrap());

    let run_eval = |name: &str, serial: bool| {
        let out = d.join(name);
        let mut args = vec![];
        if serial {
            args.push("--serial".to_string());
        }
        args.extend(["evaluate", "--features", &p(&features), "--out", &p(&out), "--trees", "30"].map(String::from));
        ok(&args);
        fs::read(out).unwrap()
    };
    let a = run_eval("a.json", false);
    assert_eq!(a, run_eval("b.json", false));
    assert_eq!(a, run_eval("c.json", true));

    let tsne = |name: &str| {
        let out = d.join(name);
        ok(&["reduce", "--features", &p(&features), "--method", "tsne", "--out", &p(&out), "--tsne-iterations", "300", "--perplexity", "5"]);
        fs::read(out).unwrap()
    };
    assert_eq!(tsne("t1.csv"), tsne("t2.csv"));
}
