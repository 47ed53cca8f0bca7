//! `labelmend` command line. Exit status: 0 on success, 1 for invalid input
//! or configuration, 2 for runtime failures (I/O, divergence).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use labelmend::classify::{predict_scores, train_classifier, ClassifierMethod, ClassifierModel};
use labelmend::cluster::{ClusterConfig, ClusterMethod, ClusterResult};
use labelmend::corpus::{inject_noise, load_dataset, Dataset, DatasetFormat, NoiseMask, NoiseSpec};
use labelmend::correct::{align_clusters, correct_labels, correction_report, corrections_csv, CorrectionConfig};
use labelmend::embed_io::{read_embeddings, write_embeddings};
use labelmend::metrics::full_metrics;
use labelmend::pipeline::{
    noise_sweep, run_experiment, tau_sweep, ClassifierConfig, ExperimentConfig, DEFAULT_TAU_GRID,
};
use labelmend::reduce::{ReductionConfig, ReductionMethod};
use labelmend::vectorize::{VectorizerMethod, VectorizerModel, DEFAULT_FEATURES};
use labelmend::{write_atomic, Error, Result};

#[derive(Parser)]
#[command(name = "labelmend", version, about = "Correct noisy binary labels by clustering document embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a vectorizer on a JSONL/CSV corpus and write its embeddings.
    Vectorize(VectorizeArgs),
    /// Inspect or convert embedding files (SDEM or CSV, by extension).
    #[command(name = "embed-io", subcommand)]
    EmbedIo(EmbedIoCommand),
    /// Reduce an embedding matrix to a few dimensions.
    Reduce(ReduceArgs),
    /// Cluster a (reduced) matrix and write per-row posteriors.
    Cluster(ClusterArgs),
    /// Overwrite labels where the aligned cluster is confident.
    Correct(CorrectArgs),
    /// Flip a fraction of a dataset's labels.
    InjectNoise(NoiseArgs),
    /// Train a classifier on embeddings and labels.
    Train(TrainArgs),
    /// Score a trained classifier against labeled embeddings.
    Evaluate(EvaluateArgs),
    /// Run the full pipeline from a JSON config.
    Experiment(ExperimentArgs),
    /// Sweep the threshold or the noise level of a config.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct VectorizeArgs {
    /// Corpus in JSONL or CSV (by extension).
    input: PathBuf,
    #[arg(long, default_value = "tfidf")]
    method: String,
    #[arg(long, default_value_t = DEFAULT_FEATURES)]
    features: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EmbedIoCommand {
    /// Print shape and value range as JSON.
    Inspect { input: PathBuf },
    /// Rewrite a matrix in the format implied by the output extension.
    Convert { input: PathBuf, output: PathBuf },
}

#[derive(Args)]
struct ReduceArgs {
    input: PathBuf,
    #[arg(long, default_value = "pca")]
    method: String,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    input: PathBuf,
    #[arg(long, default_value = "gmm")]
    method: String,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Graph neighbors for spectral clustering.
    #[arg(long, default_value_t = 15)]
    neighbors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrectArgs {
    /// `cluster.csv` written by `cluster`.
    #[arg(long)]
    clusters: PathBuf,
    /// Dataset holding the observed labels, in the same row order.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    input: PathBuf,
    /// Uniform flip rate.
    #[arg(long, conflicts_with_all = ["rate_class0", "rate_class1"])]
    rate: Option<f64>,
    #[arg(long, requires = "rate_class1")]
    rate_class0: Option<f64>,
    #[arg(long, requires = "rate_class0")]
    rate_class1: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "logreg")]
    method: String,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// `model.json` written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Flags that override the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    /// Fit the correction on test rows too and evaluate on corrected test labels.
    #[arg(long)]
    correct_test_labels: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    Tau,
    Noise,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "tau")]
    mode: SweepMode,
    /// Thresholds for `--mode tau`.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    #[command(flatten)]
    overrides: Overrides,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn load_any(path: &Path) -> Result<Dataset> {
    load_dataset(path, DatasetFormat::from_path(path))
}

fn vectorize(a: VectorizeArgs) -> Result<()> {
    let method: VectorizerMethod = a.method.parse()?;
    let data = load_any(&a.input)?;
    let model = VectorizerModel::fit(data.docs(), method, a.features)?;
    let m = model.transform(data.docs())?;
    write_embeddings(&m, &a.out.join("embeddings.sdem"))?;
    write_text(&a.out.join("vectorizer.json"), &model.to_json())?;
    println!("{} x {} embeddings written to {}", m.rows(), m.cols(), a.out.display());
    Ok(())
}

fn embed_io(c: EmbedIoCommand) -> Result<()> {
    match c {
        EmbedIoCommand::Inspect { input } => {
            let m = read_embeddings(&input)?;
            let (lo, hi) = m.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            let info = serde_json::json!({ "rows": m.rows(), "cols": m.cols(), "min": lo, "max": hi });
            println!("{info}");
        }
        EmbedIoCommand::Convert { input, output } => {
            let m = read_embeddings(&input)?;
            write_embeddings(&m, &output)?;
        }
    }
    Ok(())
}

fn reduce(a: ReduceArgs) -> Result<()> {
    let cfg = ReductionConfig { method: a.method.parse::<ReductionMethod>()?, dims: a.dims, ..Default::default() };
    let x = read_embeddings(&a.input)?;
    let z = cfg.apply(&x, a.seed)?;
    write_embeddings(&z, &a.out.join("reduced.sdem"))
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let cfg = ClusterConfig { method: a.method.parse::<ClusterMethod>()?, k: a.k, n_neighbors: a.neighbors };
    let x = read_embeddings(&a.input)?;
    let res = cfg.apply(&x, a.seed)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    write_text(&a.out.join("cluster.csv"), &res.to_csv())
}

fn correct(a: CorrectArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.clusters)?;
    let clusters = ClusterResult::from_csv(&text, ClusterMethod::Gmm)?;
    let data = load_any(&a.labels)?;
    let observed = data.observed_labels();
    let cfg = CorrectionConfig::with_tau(a.tau);
    cfg.validate()?;
    if clusters.len() != observed.len() {
        return Err(Error::Shape(format!("{} cluster rows vs {} labels", clusters.len(), observed.len())));
    }
    let alignment = align_clusters(&clusters.hard_labels, observed)?;
    let (corrected, actions) = correct_labels(observed, &clusters.posteriors, alignment, &cfg)?;
    write_text(&a.out.join("corrections.csv"), &corrections_csv(observed, &corrected, &actions))?;
    let mut report = serde_json::json!({ "tau": a.tau, "alignment": alignment });
    if let Some(truth) = data.true_labels() {
        let mask = NoiseMask { flipped: observed.iter().zip(truth).map(|(o, t)| o != t).collect() };
        report["correction"] = serde_json::to_value(correction_report(observed, &corrected, truth, &mask)?)?;
    } else {
        report["n_corrected"] = actions.iter().filter(|a| a.as_str() == "corrected").count().into();
    }
    write_text(&a.out.join("labels.jsonl"), &data.with_observed_labels(corrected)?.to_jsonl())?;
    write_text(&a.out.join("report.json"), &serde_json::to_string_pretty(&report)?)
}

fn inject(a: NoiseArgs) -> Result<()> {
    let spec = match (a.rate, a.rate_class0, a.rate_class1) {
        (Some(rate), None, None) => NoiseSpec::Uniform { rate, seed: a.seed },
        (None, Some(r0), Some(r1)) => NoiseSpec::ClassWeighted { rate_class0: r0, rate_class1: r1, seed: a.seed },
        _ => return Err(Error::Config(vec!["give --rate, or both --rate-class0 and --rate-class1".into()])),
    };
    spec.validate()?;
    let data = load_any(&a.input)?;
    let (noisy, mask) = inject_noise(data.observed_labels(), &spec)?;
    let truth = data.true_labels().map_or_else(|| data.observed_labels().to_vec(), <[u8]>::to_vec);
    let out = data.with_true_labels(Some(truth))?.with_observed_labels(noisy)?;
    write_text(&a.out.join("noisy.jsonl"), &out.to_jsonl())?;
    println!("{}: flipped {} of {} labels", spec.label(), mask.count(), mask.len());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let method: ClassifierMethod = a.method.parse()?;
    let cfg = ClassifierConfig { epochs: a.epochs, learning_rate: a.learning_rate, ..ClassifierConfig::with_method(method) };
    let x = read_embeddings(&a.embeddings)?;
    let data = load_any(&a.labels)?;
    let model = train_classifier(&x, data.observed_labels(), method, &cfg.training_config(a.seed))?;
    write_text(&a.out.join("model.json"), &model.to_json())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = ClassifierModel::from_json(&std::fs::read_to_string(&a.model)?)?;
    let x = read_embeddings(&a.embeddings)?;
    let data = load_any(&a.labels)?;
    let pred = predict_scores(&model, &x)?;
    let (metrics, curve) = full_metrics(&pred.labels, &pred.scores, data.observed_labels())?;
    if let Some(curve) = curve {
        write_text(&a.out.join("roc.csv"), &curve.to_csv())?;
    }
    let text = serde_json::to_string_pretty(&metrics)?;
    write_text(&a.out.join("metrics.json"), &text)?;
    println!("{text}");
    Ok(())
}

fn load_config(path: &Path, o: &Overrides) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(tau) = o.tau {
        cfg.correction.tau = tau;
    }
    if let Some(dims) = o.dims {
        cfg.reduction.dims = dims;
    }
    if let Some(k) = o.k {
        cfg.cluster.k = k;
    }
    if let Some(features) = o.features {
        cfg.embedding.features = features;
    }
    cfg.correct_test_labels |= o.correct_test_labels;
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let run = run_experiment(&cfg)?;
    run.write(&a.out)?;
    for level in &run.report.levels {
        let c = level.correction.as_ref();
        println!(
            "{:<16} corrected {:>5}  correction_rate {}  false_correction_rate {}  acc noisy {:.4} corrected {:.4}",
            level.name,
            c.map_or(0, |c| c.n_corrected),
            c.map_or("-".to_string(), |c| format!("{:.3}", c.correction_rate)),
            c.map_or("-".to_string(), |c| format!("{:.3}", c.false_correction_rate)),
            level.noisy_trained.acc,
            level.corrected_trained.acc,
        );
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let report = match a.mode {
        SweepMode::Tau => {
            let taus = if a.taus.is_empty() { DEFAULT_TAU_GRID.to_vec() } else { a.taus.clone() };
            if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(Error::Config(vec![format!("--taus entries must be in [0, 1], got {t}")]));
            }
            tau_sweep(&cfg, &taus)?
        }
        SweepMode::Noise => noise_sweep(&cfg, &cfg.noise)?,
    };
    let csv = report.to_csv();
    write_text(&a.out.join("sweep.csv"), &csv)?;
    write_text(&a.out.join("sweep.json"), &serde_json::to_string_pretty(&report)?)?;
    print!("{csv}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Vectorize(a) => vectorize(a),
        Command::EmbedIo(c) => embed_io(c),
        Command::Reduce(a) => reduce(a),
        Command::Cluster(a) => cluster(a),
        Command::Correct(a) => correct(a),
        Command::InjectNoise(a) => inject(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
