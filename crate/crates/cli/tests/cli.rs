use std::path::Path;
use std::process::{Command, Output};

fn labelmend(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labelmend")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_corpus(path: &Path) {
    let topics = [["goal", "team", "coach", "league"], ["oven", "flour", "butter", "recipe"]];
    let mut text = String::new();
    for i in 0..80 {
        let label = i % 2;
        let w = &topics[label];
        text.push_str(&format!(
            "{{\"id\": \"p{i}\", \"text\": \"{} {} {} news\", \"label\": {label}}}\n",
            w[i % 4],
            w[(i + 1) % 4],
            w[(i / 2) % 4]
        ));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&labelmend(&["--help"], dir.path())), 0);
    assert_eq!(code(&labelmend(&["--version"], dir.path())), 0);
    assert_eq!(code(&labelmend(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&labelmend(&["reduce"], dir.path())), 1);
}

#[test]
fn experiment_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"source": {"kind": "synthetic", "n": 300, "dims": 8, "separation": 6},
            "noise": [{"mode": "uniform", "rate": 0.3}]}"#,
    )
    .unwrap();
    let o = labelmend(&["experiment", "--config", "cfg.json", "--out", "run", "--seed", "4", "--tau", "0.95"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "roc.csv", "corrections.csv", "labels.csv", "cluster.csv", "embeddings.sdem"] {
        assert!(dir.path().join("run").join(f).is_file(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 4);
    assert_eq!(report["config"]["correction"]["tau"], 0.95);
    let roc = std::fs::read_to_string(dir.path().join("run/roc.csv")).unwrap();
    assert!(roc.starts_with("threshold,fpr,tpr\n"));
    let corr = std::fs::read_to_string(dir.path().join("run/corrections.csv")).unwrap();
    assert!(corr.starts_with("index,observed,corrected,action\n"));
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"source": {"kind": "synthetic", "n": 300, "dims": 8, "separation": 6},
            "correction": {"tau": 2}, "test_fraction": 1.5, "classifier": {"epochs": 0}}"#,
    )
    .unwrap();
    let o = labelmend(&["experiment", "--config", "cfg.json", "--out", "run"], dir.path());
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("tau") && err.contains("test_fraction") && err.contains("epochs"), "{err}");
    assert!(!dir.path().join("run").exists());
}

#[test]
fn runtime_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"source": {"kind": "jsonl", "path": "missing.jsonl"}}"#).unwrap();
    let o = labelmend(&["experiment", "--config", "cfg.json", "--out", "run"], dir.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = labelmend(&["embed-io", "inspect", "nope.sdem"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn stage_by_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_corpus(&p.join("posts.jsonl"));
    let steps: [&[&str]; 7] = [
        &["inject-noise", "posts.jsonl", "--rate", "0.2", "--seed", "3", "--out", "noisy"],
        &["vectorize", "noisy/noisy.jsonl", "--method", "count", "--features", "32", "--out", "emb"],
        &["reduce", "emb/embeddings.sdem", "--method", "pca", "--dims", "2", "--out", "red"],
        &["cluster", "red/reduced.sdem", "--method", "gmm", "--k", "2", "--out", "clu"],
        &["correct", "--clusters", "clu/cluster.csv", "--labels", "noisy/noisy.jsonl", "--tau", "0.9", "--out", "cor"],
        &["train", "--embeddings", "emb/embeddings.sdem", "--labels", "cor/labels.jsonl", "--method", "mnb", "--out", "model"],
        &["evaluate", "--model", "model/model.json", "--embeddings", "emb/embeddings.sdem", "--labels", "posts.jsonl", "--out", "eval"],
    ];
    for args in steps {
        let o = labelmend(args, p);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("cor/report.json")).unwrap()).unwrap();
    assert_eq!(report["correction"]["n_noisy"], 16);
    assert!(report["correction"]["correction_rate"].as_f64().unwrap() > 0.5);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("eval/metrics.json")).unwrap()).unwrap();
    assert!(metrics["acc"].as_f64().unwrap() > 0.9);
    assert!(p.join("eval/roc.csv").is_file());
    assert!(p.join("emb/vectorizer.json").is_file());
}

#[test]
fn embed_io_convert_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("m.csv"), "0.5,1.5\n-2,4\n3,0.25\n").unwrap();
    assert_eq!(code(&labelmend(&["embed-io", "convert", "m.csv", "m.sdem"], p)), 0);
    assert_eq!(std::fs::metadata(p.join("m.sdem")).unwrap().len(), 13 + 6 * 4);
    let o = labelmend(&["embed-io", "inspect", "m.sdem"], p);
    let info: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((info["rows"].as_u64(), info["cols"].as_u64()), (Some(3), Some(2)));
    assert_eq!(info["min"], -2.0);
    std::fs::write(p.join("bad.sdem"), b"NOPE\x01\x00\x00\x00\x00").unwrap();
    let o = labelmend(&["embed-io", "inspect", "bad.sdem"], p);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("magic"));
}

#[test]
fn tau_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"source": {"kind": "synthetic", "n": 200, "dims": 4, "separation": 4},
            "noise": [{"mode": "uniform", "rate": 0.3}]}"#,
    )
    .unwrap();
    let o = labelmend(&["sweep", "--config", "cfg.json", "--out", "sw", "--taus", "0.99,0.5,1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let counts: Vec<usize> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(counts.len(), 3);
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(counts[2], 0);

    let o = labelmend(&["sweep", "--config", "cfg.json", "--out", "sw2", "--mode", "noise"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("sw2/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(code(&labelmend(&["sweep", "--config", "cfg.json", "--out", "sw3", "--taus", "1.5"], dir.path())), 1);
}
