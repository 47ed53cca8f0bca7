use std::path::Path;

use labelmend::classify::ClassifierMethod;
use labelmend::corpus::NoiseSpec;
use labelmend::embed_io::{read_embeddings, write_embeddings};
use labelmend::pipeline::{run_experiment, ExperimentConfig, Source};
use labelmend::reduce::ReductionMethod;
use labelmend::Error;

const SPORT: &[&str] = &["match", "goal", "team", "coach", "league", "score", "season", "striker"];
const COOKING: &[&str] = &["oven", "flour", "recipe", "butter", "simmer", "garlic", "bake", "sauce"];

fn corpus_jsonl(n_per_class: usize) -> String {
    let mut out = String::new();
    for i in 0..n_per_class * 2 {
        let (words, label) = if i % 2 == 0 { (SPORT, 0) } else { (COOKING, 1) };
        let text: Vec<&str> = (0..6).map(|k| words[(i * 3 + k * 5) % words.len()]).collect();
        out.push_str(&format!(
            "{{\"id\": \"doc-{i}\", \"text\": \"{} and more {}\", \"label\": {label}}}\n",
            text.join(" "),
            if i % 3 == 0 { "today" } else { "again" }
        ));
    }
    out
}

fn referenced_files_exist(out: &Path, report: &serde_json::Value) {
    let mut paths = vec![
        report["artifacts"]["embeddings"].as_str().unwrap().to_string(),
        report["artifacts"]["reduced"].as_str().unwrap().to_string(),
        report["artifacts"]["clusters"].as_str().unwrap().to_string(),
    ];
    for level in report["levels"].as_array().unwrap() {
        for v in level["files"].as_object().unwrap().values() {
            if let Some(p) = v.as_str() {
                paths.push(p.to_string());
            }
        }
    }
    for p in paths {
        assert!(out.join(&p).is_file(), "missing {p}");
    }
    let leftovers: Vec<_> = walk(out).into_iter().filter(|p| p.ends_with(".partial")).collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path.display().to_string());
        }
    }
    out
}

#[test]
fn text_corpus_through_the_whole_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("posts.jsonl"), corpus_jsonl(60)).unwrap();
    let mut cfg = ExperimentConfig::from_json(
        r#"{
            "source": {"kind": "jsonl", "path": "posts.jsonl"},
            "embedding": {"method": "tfidf", "features": 64},
            "noise": [{"mode": "uniform", "rate": 0.2}, {"mode": "class_weighted", "rate_class0": 0.3, "rate_class1": 0.1}],
            "classifier": {"method": "mnb"},
            "seed": 5
        }"#,
    )
    .unwrap();
    cfg.resolve_paths(dir.path());
    let out = dir.path().join("out");
    let run = run_experiment(&cfg).unwrap();
    run.write(&out).unwrap();

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    referenced_files_exist(&out, &report);
    assert_eq!(report["levels"].as_array().unwrap().len(), 2);
    let first = &run.report.levels[0];
    assert!(first.correction.as_ref().unwrap().correction_rate > 0.5);
    assert!(first.corrected_trained.acc >= first.noisy_trained.acc);

    // test rows keep the label they were read with
    let labels = std::fs::read_to_string(out.join("labels.csv")).unwrap();
    let source = corpus_jsonl(60);
    let originals: Vec<u8> = source.lines().map(|l| if l.contains("\"label\": 1") { 1 } else { 0 }).collect();
    let mut n_test = 0;
    for line in labels.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let i: usize = f[0].parse().unwrap();
        assert_eq!(f[3].parse::<u8>().unwrap(), originals[i]);
        if f[2] == "test" {
            n_test += 1;
            assert_eq!(f[6].parse::<u8>().unwrap(), originals[i]);
        }
    }
    assert_eq!(n_test, 24);
}

#[test]
fn precomputed_embeddings_source() {
    let dir = tempfile::tempdir().unwrap();
    let (x, labels) = labelmend::corpus::generate_synthetic(120, 5, 6.0, 9).unwrap();
    write_embeddings(&x, &dir.path().join("vectors.sdem")).unwrap();
    let mut csv = String::from("id,text,label\n");
    for (i, l) in labels.iter().enumerate() {
        csv.push_str(&format!("r{i},,{l}\n"));
    }
    std::fs::write(dir.path().join("labels.csv"), csv).unwrap();

    let mut cfg = ExperimentConfig::synthetic(2, 2, 0.0);
    cfg.source = Source::Embeddings { path: "vectors.sdem".into(), labels: "labels.csv".into() };
    cfg.resolve_paths(dir.path());
    cfg.noise = vec![NoiseSpec::Uniform { rate: 0.25, seed: 1 }];
    cfg.reduction.method = ReductionMethod::Autoencoder;
    cfg.reduction.epochs = 150;
    let run = run_experiment(&cfg).unwrap();
    run.write(&dir.path().join("out")).unwrap();

    let stored = read_embeddings(&dir.path().join("out/embeddings.sdem")).unwrap();
    assert_eq!(stored.shape(), (120, 5));
    let reduced = read_embeddings(&dir.path().join("out/reduced.sdem")).unwrap();
    assert_eq!(reduced.shape(), (96, 2));
}

#[test]
fn failed_runs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::synthetic(100, 4, 4.0);
    cfg.noise = vec![NoiseSpec::Uniform { rate: 0.1, seed: 0 }];
    cfg.classifier.method = ClassifierMethod::Mnb; // negative features
    let out = dir.path().join("out");
    let err = run_experiment(&cfg).and_then(|r| r.write(&out)).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "train", .. }), "{err}");
    assert!(!out.exists());
}

#[test]
fn test_label_correction_is_opt_in() {
    let mut cfg = ExperimentConfig::synthetic(200, 4, 6.0);
    cfg.noise = vec![NoiseSpec::Uniform { rate: 0.3, seed: 0 }];
    cfg.correct_test_labels = true;
    let run = run_experiment(&cfg).unwrap();
    assert_eq!(run.report.correction_split, "train+test");
    assert_eq!(run.report.evaluation_labels, "corrected");
    let c = run.report.levels[0].correction.as_ref().unwrap();
    // test rows carry no injected noise, so they count as clean rows
    assert_eq!(c.n_noisy + c.n_clean, 200);
}

#[test]
fn missing_input_is_a_runtime_error() {
    let cfg = ExperimentConfig::from_json(r#"{"source": {"kind": "jsonl", "path": "/nonexistent/posts.jsonl"}}"#)
        .unwrap();
    let err = run_experiment(&cfg).unwrap_err();
    assert!(!err.is_validation(), "{err}");
    assert!(err.to_string().contains("`load`"));
}
