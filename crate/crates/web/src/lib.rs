//! WebAssembly bindings for the browser demo in `www/`. Every export returns
//! a JSON string; the plain functions underneath are testable natively.

use labelmend::classify::ClassifierMethod;
use labelmend::corpus::NoiseSpec;
use labelmend::pipeline::{level_labels, prepare, run_experiment, tau_sweep, ExperimentConfig};
use labelmend::reduce::ReductionMethod;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn config(n: usize, separation: f64, noise_rate: f64, reduction: &str, seed: u64) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::synthetic(n, 16, separation);
    cfg.reduction.method = reduction.parse::<ReductionMethod>().map_err(|e| e.to_string())?;
    cfg.noise = vec![NoiseSpec::Uniform { rate: noise_rate, seed: 0 }];
    cfg.seed = seed;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Point {
    x: f64,
    y: f64,
    truth: u8,
    noisy: u8,
    corrected: u8,
    confidence: f64,
}

#[derive(Serialize)]
struct CorrectionView {
    points: Vec<Point>,
    n_noisy: usize,
    n_corrected: usize,
    restored: usize,
    broken: usize,
}

/// Reduced training points with their true, noisy and corrected labels.
pub fn correct_synthetic_json(
    n: usize,
    separation: f64,
    noise_rate: f64,
    tau: f64,
    reduction: &str,
    seed: u64,
) -> Result<String, String> {
    let mut cfg = config(n, separation, noise_rate, reduction, seed)?;
    if cfg.reduction.method == ReductionMethod::None {
        return Err("pick a reduction so the points can be drawn in 2-D".into());
    }
    cfg.correction.tau = tau;
    cfg.validate().map_err(|e| e.to_string())?;
    let prep = prepare(&cfg).map_err(|e| e.to_string())?;
    let labels = level_labels(&cfg, &prep, cfg.noise.first()).map_err(|e| e.to_string())?;
    let truth = prep.dataset.true_labels().unwrap();

    let mut view = CorrectionView { points: Vec::new(), n_noisy: 0, n_corrected: 0, restored: 0, broken: 0 };
    for (k, &i) in prep.fit_rows.iter().enumerate() {
        let p = prep.reduced.row(k);
        let (t, noisy, corrected) = (truth[i], labels.noisy[i], labels.corrected[i]);
        view.n_noisy += usize::from(noisy != t);
        view.n_corrected += usize::from(corrected != noisy);
        view.restored += usize::from(noisy != t && corrected == t);
        view.broken += usize::from(noisy == t && corrected != t);
        view.points.push(Point {
            x: p[0],
            y: p[1],
            truth: t,
            noisy,
            corrected,
            confidence: prep.clusters.posteriors[k].iter().cloned().fold(0.0, f64::max),
        });
    }
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Correction counts and rates over an evenly spaced threshold grid.
pub fn tau_sweep_json(n: usize, separation: f64, noise_rate: f64, reduction: &str, seed: u64) -> Result<String, String> {
    let cfg = config(n, separation, noise_rate, reduction, seed)?;
    let taus: Vec<f64> = (0..=20).map(|i| f64::from(i) / 20.0).collect();
    let sweep = tau_sweep(&cfg, &taus).map_err(|e| e.to_string())?;
    serde_json::to_string(&sweep).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    name: &'static str,
    auc: Option<f64>,
    acc: f64,
    fpr: Vec<f64>,
    tpr: Vec<f64>,
}

/// ROC curves of one classifier trained on noisy, corrected and clean labels.
pub fn classifier_roc_json(
    method: &str,
    n: usize,
    separation: f64,
    noise_rate: f64,
    seed: u64,
) -> Result<String, String> {
    let mut cfg = config(n, separation, noise_rate, "pca", seed)?;
    cfg.classifier.method = method.parse::<ClassifierMethod>().map_err(|e| e.to_string())?;
    if cfg.classifier.method == ClassifierMethod::Mnb {
        return Err("naive Bayes needs nonnegative features; the synthetic data is Gaussian".into());
    }
    let run = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let level = &run.report.levels[0];
    let mut curves = Vec::new();
    let sets = [
        ("noisy", &level.files.roc_noisy, Some(&level.noisy_trained)),
        ("corrected", &level.files.roc_corrected, Some(&level.corrected_trained)),
        ("clean", &level.files.roc_clean, level.clean_trained.as_ref()),
    ];
    for (name, file, metrics) in sets {
        let (Some(file), Some(m)) = (file, metrics) else { continue };
        let text = String::from_utf8_lossy(run.file(file).unwrap()).into_owned();
        let (mut fpr, mut tpr) = (Vec::new(), Vec::new());
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            fpr.push(f[1].parse().unwrap());
            tpr.push(f[2].parse().unwrap());
        }
        curves.push(Curve { name, auc: m.auc, acc: m.acc, fpr, tpr });
    }
    serde_json::to_string(&curves).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn correct_synthetic(
    n: usize,
    separation: f64,
    noise_rate: f64,
    tau: f64,
    reduction: &str,
    seed: u32,
) -> Result<String, JsError> {
    correct_synthetic_json(n, separation, noise_rate, tau, reduction, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tauSweep)]
pub fn tau_sweep_js(n: usize, separation: f64, noise_rate: f64, reduction: &str, seed: u32) -> Result<String, JsError> {
    tau_sweep_json(n, separation, noise_rate, reduction, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = classifierRoc)]
pub fn classifier_roc(method: &str, n: usize, separation: f64, noise_rate: f64, seed: u32) -> Result<String, JsError> {
    classifier_roc_json(method, n, separation, noise_rate, u64::from(seed)).map_err(|e| JsError::new(&e))
}
