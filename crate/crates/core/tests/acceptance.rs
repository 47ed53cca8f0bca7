//! Acceptance gate. One PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails. Tolerances are fixed constants below.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use std::time::Instant;

use labelmend::classify::{mlp_objective, train_classifier, ClassifierMethod, ClassifierParams, TrainingConfig};
use labelmend::cluster::{gmm_fit, kmeans, RESTARTS};
use labelmend::corpus::{generate_synthetic, NoiseSpec};
use labelmend::metrics::roc_auc;
use labelmend::pipeline::{
    default_noise_levels, noise_sweep, run_experiment, tau_sweep, ExperimentConfig, DEFAULT_TAU_GRID,
};
use labelmend::reduce::{pca_fit_transform, AutoencoderModel, ReductionMethod};
use labelmend::EmbeddingMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AC1_MIN_CORRECTION: f64 = 0.5;
const AC1_MAX_FALSE: f64 = 0.1;
const AC1_BUDGET_SECS: f64 = 120.0;
const AC2_MIN_GAIN: f64 = 0.05;
const AC3_SLACK: f64 = 1e-9;
const AC4_PCA_TOL: f64 = 1e-8;
const AC5_REL_TOL: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely.
const AC5_FLOOR: f64 = 1e-5;
const AC5_STEP: f64 = 1e-6;

type Outcome = (bool, String);

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> EmbeddingMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    EmbeddingMatrix::new(rows, cols, data).unwrap()
}

fn ac1_correction_rates() -> Outcome {
    let start = Instant::now();
    let mut worst = (1.0f64, 0.0f64);
    let mut failures = Vec::new();
    for method in [ReductionMethod::Pca, ReductionMethod::Umap] {
        let mut cfg = ExperimentConfig::synthetic(2000, 32, 6.0);
        cfg.reduction.method = method;
        cfg.seed = 2024;
        let sweep = match noise_sweep(&cfg, &default_noise_levels()) {
            Ok(s) => s,
            Err(e) => return (false, format!("{method:?}: {e}")),
        };
        for row in &sweep.rows {
            let r = row.report.as_ref().unwrap();
            worst.0 = worst.0.min(r.correction_rate);
            worst.1 = worst.1.max(r.false_correction_rate);
            if !(r.correction_rate > AC1_MIN_CORRECTION && r.false_correction_rate < AC1_MAX_FALSE) {
                failures.push(format!(
                    "{method:?}/{}: cr={:.3} fcr={:.3}",
                    row.level, r.correction_rate, r.false_correction_rate
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < AC1_BUDGET_SECS;
    (
        ok,
        format!(
            "pca+gmm, umap+gmm x 6 levels: min correction_rate {:.3} (> {AC1_MIN_CORRECTION}), max false_correction_rate {:.3} (< {AC1_MAX_FALSE}), {secs:.1}s (< {AC1_BUDGET_SECS}s){}",
            worst.0,
            worst.1,
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn ac2_corrected_training() -> Outcome {
    let mut gains = Vec::new();
    for seed in 0..5 {
        let mut cfg = ExperimentConfig::synthetic(2000, 32, 6.0);
        cfg.noise = vec![NoiseSpec::Uniform { rate: 0.3, seed: 0 }];
        cfg.seed = seed;
        let run = match run_experiment(&cfg) {
            Ok(r) => r,
            Err(e) => return (false, format!("seed {seed}: {e}")),
        };
        let level = &run.report.levels[0];
        gains.push(level.corrected_trained.acc - level.noisy_trained.acc);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let shown: Vec<String> = gains.iter().map(|g| format!("{:+.4}", g)).collect();
    (
        mean >= AC2_MIN_GAIN,
        format!(
            "logreg accuracy gain corrected-vs-noisy at uniform-30, mean over 5 seeds {:+.4} (>= {AC2_MIN_GAIN}); per seed [{}]",
            mean,
            shown.join(", ")
        ),
    )
}

fn ac3_em_monotone() -> Outcome {
    let mut violations = 0;
    let mut worst_drop = 0.0f64;
    let mut iterations = 0;
    for seed in 0..100 {
        let (x, _) = generate_synthetic(400, 2, 2.5, seed).unwrap();
        let (model, _) = match gmm_fit(&x, 2, seed) {
            Ok(m) => m,
            Err(e) => return (false, format!("seed {seed}: {e}")),
        };
        for w in model.log_likelihood_trace.windows(2) {
            iterations += 1;
            let drop = w[0] - w[1];
            worst_drop = worst_drop.max(drop);
            if drop > AC3_SLACK {
                violations += 1;
            }
        }
    }
    (
        violations == 0,
        format!("100 seeds, {iterations} EM steps, {violations} decreases beyond {AC3_SLACK:e} (largest drop {worst_drop:e})"),
    )
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: (values, column vectors).
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (values, vectors)
}

fn pca_oracle(x: &EmbeddingMatrix, d: usize) -> Vec<Vec<f64>> {
    let (n, c) = x.shape();
    let mean: Vec<f64> = (0..c).map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64).collect();
    let cov: Vec<Vec<f64>> = (0..c)
        .map(|a| {
            (0..c)
                .map(|b| (0..n).map(|i| (x.get(i, a) - mean[a]) * (x.get(i, b) - mean[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect();
    let (values, vectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    (0..n)
        .map(|i| {
            order[..d]
                .iter()
                .map(|&k| (0..c).map(|j| (x.get(i, j) - mean[j]) * vectors[k][j]).sum())
                .collect()
        })
        .collect()
}

fn ac4_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_pca = 0.0f64;
    for _ in 0..20 {
        let x = random_matrix(&mut rng, 20, 6, 3.0);
        let (_, z) = pca_fit_transform(&x, 3).unwrap();
        let oracle = pca_oracle(&x, 3);
        for comp in 0..3 {
            let same: f64 = (0..20).map(|i| (z.get(i, comp) - oracle[i][comp]).abs()).fold(0.0, f64::max);
            let flipped: f64 = (0..20).map(|i| (z.get(i, comp) + oracle[i][comp]).abs()).fold(0.0, f64::max);
            worst_pca = worst_pca.max(same.min(flipped));
        }
    }

    let mut auc_mismatch = 0;
    for _ in 0..100 {
        let scores: Vec<f64> = (0..50).map(|_| f64::from(rng.random_range(0u8..12)) / 11.0).collect();
        let mut truth: Vec<u8> = (0..50).map(|_| rng.random_range(0u8..2)).collect();
        truth[0] = 0;
        truth[1] = 1;
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..50 {
            for j in 0..50 {
                if truth[i] == 1 && truth[j] == 0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        if roc_auc(&scores, &truth).unwrap().0 != wins / pairs {
            auc_mismatch += 1;
        }
    }

    let pts = [[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
    let x = EmbeddingMatrix::from_rows(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap();
    let mut best = f64::INFINITY;
    for mask in 1u8..15 {
        let mut sse = 0.0;
        for side in [true, false] {
            let members: Vec<&[f64; 2]> = (0..4).filter(|&i| ((mask >> i) & 1 == 1) == side).map(|i| &pts[i]).collect();
            let c = [0, 1].map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64);
            sse += members.iter().map(|p| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sum::<f64>();
        }
        best = best.min(sse);
    }
    let fit = kmeans(&x, 2, RESTARTS, 0).unwrap();
    let km_ok = (fit.inertia - best).abs() < 1e-12;

    (
        worst_pca < AC4_PCA_TOL && auc_mismatch == 0 && km_ok,
        format!(
            "PCA vs Jacobi max |diff| {worst_pca:.2e} (< {AC4_PCA_TOL:e}) over 20 inputs; AUC vs pair counting {auc_mismatch}/100 mismatches; k-means inertia {} vs exhaustive optimum {best}",
            fit.inertia
        ),
    )
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(AC5_FLOOR)
}

fn ac5_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_matrix(&mut rng, 6, 5, 1.0);
    let mut ae = AutoencoderModel::new(5, 4, 2, 3);
    let (_, grad) = ae.loss_and_gradient(&x);
    let mut worst_ae = 0.0f64;
    for j in 0..grad.len() {
        let orig = ae.params()[j];
        ae.params_mut()[j] = orig + AC5_STEP;
        let up = ae.loss(&x);
        ae.params_mut()[j] = orig - AC5_STEP;
        let down = ae.loss(&x);
        ae.params_mut()[j] = orig;
        worst_ae = worst_ae.max(relative_error(grad[j], (up - down) / (2.0 * AC5_STEP)));
    }

    let xm = random_matrix(&mut rng, 4, 3, 1.5);
    let y = [0, 1, 1, 0];
    let hyper = TrainingConfig { epochs: 3, hidden: 6, ..TrainingConfig::for_method(ClassifierMethod::Mlp) };
    let model = train_classifier(&xm, &y, ClassifierMethod::Mlp, &hyper).unwrap();
    let ClassifierParams::Dense { mut network } = model.params else { unreachable!() };
    let (_, grad) = mlp_objective(&network, &xm, &y);
    let mut worst_mlp = 0.0f64;
    for j in 0..grad.len() {
        let orig = network.params[j];
        network.params[j] = orig + AC5_STEP;
        let up = mlp_objective(&network, &xm, &y).0;
        network.params[j] = orig - AC5_STEP;
        let down = mlp_objective(&network, &xm, &y).0;
        network.params[j] = orig;
        worst_mlp = worst_mlp.max(relative_error(grad[j], (up - down) / (2.0 * AC5_STEP)));
    }
    (
        worst_ae < AC5_REL_TOL && worst_mlp < AC5_REL_TOL,
        format!(
            "max relative error autoencoder {worst_ae:.2e}, mlp {worst_mlp:.2e} (< {AC5_REL_TOL:e}, floor {AC5_FLOOR:e}, step {AC5_STEP:e})"
        ),
    )
}

fn ac6_tau_nesting() -> Outcome {
    let mut cfg = ExperimentConfig::synthetic(600, 8, 4.0);
    cfg.noise = vec![NoiseSpec::Uniform { rate: 0.3, seed: 0 }];
    let sweep = match tau_sweep(&cfg, &DEFAULT_TAU_GRID) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let nested = sweep.rows.windows(2).all(|w| w[1].corrected_rows.iter().all(|i| w[0].corrected_rows.contains(i)));
    let last = sweep.rows.last().unwrap();
    let counts: Vec<String> = sweep.rows.iter().map(|r| format!("{}:{}", r.tau, r.n_corrected)).collect();
    (
        nested && last.tau == 1.0 && last.n_corrected == 0,
        format!("corrected sets nested across tau [{}]; tau=1 corrections {}", counts.join(" "), last.n_corrected),
    )
}

fn ac7_determinism() -> Outcome {
    let mut cfg = ExperimentConfig::synthetic(400, 16, 5.0);
    cfg.noise = vec![NoiseSpec::Uniform { rate: 0.2, seed: 0 }, NoiseSpec::ClassWeighted { rate_class0: 0.3, rate_class1: 0.1, seed: 0 }];
    cfg.reduction.method = ReductionMethod::Umap;
    cfg.classifier.method = ClassifierMethod::Mlp;
    cfg.seed = 77;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut reports = Vec::new();
    for dir in &dirs {
        let run = match run_experiment(&cfg) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        run.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["wall_clock_seconds"] = serde_json::Value::Null;
        reports.push(v);
    }
    let same_report = reports[0] == reports[1];
    let mut sdem_same = true;
    let mut n_sdem = 0;
    for name in ["embeddings.sdem", "reduced.sdem"] {
        n_sdem += 1;
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        sdem_same &= a == b;
    }
    (
        same_report && sdem_same,
        format!("two umap+gmm+mlp runs: reports identical excluding wall clock: {same_report}; {n_sdem} SDEM artifacts bit-identical: {sdem_same}"),
    )
}

fn ac8_sdem_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut shapes = vec![(1, 1), (1000, 512)];
    while shapes.len() < 50 {
        shapes.push((rng.random_range(1..80), rng.random_range(1..40)));
    }
    let mut mismatches = 0;
    for &(r, c) in &shapes {
        let m = random_matrix(&mut rng, r, c, 1e3);
        let first = m.to_sdem_bytes().unwrap();
        let back = EmbeddingMatrix::from_sdem_bytes(&first).unwrap();
        let second = back.to_sdem_bytes().unwrap();
        if first != second || back.shape() != (r, c) {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("{} matrices incl. 1x1 and 1000x512, {mismatches} byte mismatches", shapes.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("AC1 correction rates", ac1_correction_rates),
        ("AC2 corrected-label training gain", ac2_corrected_training),
        ("AC3 EM monotonicity", ac3_em_monotone),
        ("AC4 oracle equivalences", ac4_oracles),
        ("AC5 gradient checks", ac5_gradients),
        ("AC6 tau nesting", ac6_tau_nesting),
        ("AC7 experiment determinism", ac7_determinism),
        ("AC8 SDEM round trips", ac8_sdem_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!("{} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
