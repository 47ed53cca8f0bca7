//! Config-driven experiments: embed, reduce, cluster, align, correct, train
//! and evaluate, plus the threshold and noise-level sweeps.
//!
//! Everything is computed in memory first and only then written, one file at
//! a time through a temporary sibling, so a failing run leaves no partial
//! artifacts behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classify::{predict_scores, train_classifier, ClassifierMethod, TrainingConfig};
use crate::cluster::{ClusterConfig, ClusterMethod, ClusterResult};
use crate::corpus::{self, Dataset, DatasetFormat, NoiseMask, NoiseSpec};
use crate::correct::{self, Action, Alignment, CorrectionConfig, CorrectionReport};
use crate::embed_io::{self, EmbeddingMatrix};
use crate::error::StageExt;
use crate::metrics::{full_metrics, MetricSet};
use crate::reduce::{ReductionConfig, ReductionMethod};
use crate::vectorize::{VectorizerMethod, VectorizerModel, DEFAULT_FEATURES};
use crate::{util, Error, Result};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Uniform 10/20/30/40% and class-weighted 30-10 and 25-15.
pub fn default_noise_levels() -> Vec<NoiseSpec> {
    let mut levels: Vec<NoiseSpec> =
        [0.1, 0.2, 0.3, 0.4].iter().map(|&rate| NoiseSpec::Uniform { rate, seed: 0 }).collect();
    levels.push(NoiseSpec::ClassWeighted { rate_class0: 0.3, rate_class1: 0.1, seed: 0 });
    levels.push(NoiseSpec::ClassWeighted { rate_class0: 0.25, rate_class1: 0.15, seed: 0 });
    levels
}

pub const DEFAULT_TAU_GRID: [f64; 5] = [0.0, 0.5, 0.9, 0.99, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Synthetic { n: usize, dims: usize, separation: f64 },
    Jsonl { path: PathBuf },
    Csv { path: PathBuf },
    /// Precomputed embeddings (SDEM or CSV) with labels from a JSONL/CSV file
    /// in the same row order.
    Embeddings { path: PathBuf, labels: PathBuf },
}

impl Source {
    const KINDS: &'static [&'static str] = &["synthetic", "jsonl", "csv", "embeddings"];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub method: VectorizerMethod,
    pub features: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { method: VectorizerMethod::Tfidf, features: DEFAULT_FEATURES }
    }
}

/// Classifier choice; unset hyperparameters fall back to
/// [`TrainingConfig::for_method`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub method: ClassifierMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { method: ClassifierMethod::Logreg, epochs: None, learning_rate: None, l2: None, alpha: None, hidden: None }
    }
}

impl ClassifierConfig {
    pub fn with_method(method: ClassifierMethod) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn training_config(&self, seed: u64) -> TrainingConfig {
        let base = TrainingConfig::for_method(self.method);
        TrainingConfig {
            epochs: self.epochs.unwrap_or(base.epochs),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            l2: self.l2.unwrap_or(base.l2),
            alpha: self.alpha.unwrap_or(base.alpha),
            hidden: self.hidden.unwrap_or(base.hidden),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: Source,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub reduction: ReductionConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub correction: CorrectionConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    /// One experiment level per entry; empty means no injected noise.
    #[serde(default)]
    pub noise: Vec<NoiseSpec>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    /// Fit the correction on train and test rows together and evaluate
    /// against the corrected test labels.
    #[serde(default)]
    pub correct_test_labels: bool,
}

fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}

const TOP_LEVEL_KEYS: &[&str] = &[
    "source",
    "embedding",
    "reduction",
    "cluster",
    "correction",
    "classifier",
    "noise",
    "test_fraction",
    "seed",
    "correct_test_labels",
];

/// Problems that serde would report one at a time: unknown keys and unknown
/// method names.
fn structural_problems(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    let Some(obj) = v.as_object() else {
        return vec!["config must be a JSON object".to_string()];
    };
    for key in obj.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            out.push(format!("unknown field `{key}`"));
        }
    }
    let mut check = |path: &str, value: Option<&Value>, allowed: &[&str]| {
        if let Some(value) = value {
            match value.as_str() {
                Some(s) if allowed.contains(&s) => {}
                _ => out.push(format!("{path} must be one of {}, got {value}", allowed.join("/"))),
            }
        }
    };
    match obj.get("source") {
        None => check("source.kind", Some(&Value::Null), Source::KINDS),
        Some(src) => check("source.kind", Some(src.get("kind").unwrap_or(&Value::Null)), Source::KINDS),
    }
    let field = |section: &str, key: &str| obj.get(section).and_then(|s| s.get(key)).cloned();
    check("embedding.method", field("embedding", "method").as_ref(), VectorizerMethod::NAMES);
    check("reduction.method", field("reduction", "method").as_ref(), ReductionMethod::NAMES);
    check("cluster.method", field("cluster", "method").as_ref(), ClusterMethod::NAMES);
    check("classifier.method", field("classifier", "method").as_ref(), ClassifierMethod::NAMES);
    if let Some(levels) = obj.get("noise").and_then(Value::as_array) {
        for (i, level) in levels.iter().enumerate() {
            check(
                &format!("noise[{i}].mode"),
                Some(level.get("mode").unwrap_or(&Value::Null)),
                &["uniform", "class_weighted"],
            );
        }
    }
    out
}

impl ExperimentConfig {
    pub fn synthetic(n: usize, dims: usize, separation: f64) -> Self {
        Self {
            source: Source::Synthetic { n, dims, separation },
            embedding: EmbeddingConfig::default(),
            reduction: ReductionConfig::default(),
            cluster: ClusterConfig::default(),
            correction: CorrectionConfig::default(),
            classifier: ClassifierConfig::default(),
            noise: Vec::new(),
            test_fraction: DEFAULT_TEST_FRACTION,
            seed: 0,
            correct_test_labels: false,
        }
    }

    /// Parse and validate, reporting every problem found rather than the first.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let mut problems = structural_problems(&value);
        if problems.is_empty() {
            match serde_json::from_value::<Self>(value) {
                Ok(cfg) => {
                    problems = cfg.problems();
                    if problems.is_empty() {
                        return Ok(cfg);
                    }
                }
                Err(e) => problems.push(e.to_string()),
            }
        }
        Err(Error::Config(problems))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Make relative input paths relative to `base` (usually the directory
    /// holding the config file).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.source {
            Source::Synthetic { .. } => {}
            Source::Jsonl { path } | Source::Csv { path } => fix(path),
            Source::Embeddings { path, labels } => {
                fix(path);
                fix(labels);
            }
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Source::Synthetic { n, dims, separation } = self.source {
            if n < 4 || n % 2 != 0 {
                out.push(format!("source.n must be even and at least 4, got {n}"));
            }
            if dims < 2 {
                out.push(format!("source.dims must be at least 2, got {dims}"));
            }
            if !(separation >= 0.0 && separation.is_finite()) {
                out.push(format!("source.separation must be >= 0, got {separation}"));
            }
        }
        if self.embedding.features == 0 {
            out.push("embedding.features must be at least 1".to_string());
        }
        out.extend(self.reduction.problems());
        out.extend(self.cluster.problems());
        if let Err(e) = self.correction.validate() {
            out.push(format!("correction: {e}"));
        }
        out.extend(self.classifier.training_config(self.seed).problems());
        for (i, level) in self.noise.iter().enumerate() {
            if let Err(e) = level.validate() {
                out.push(format!("noise[{i}]: {e}"));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            out.push(format!("test_fraction must be in (0, 1), got {}", self.test_fraction));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Independent sub-seeds per stage (splitmix64 finalizer).
fn sub_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SEED_DATA: u64 = 1;
const SEED_SPLIT: u64 = 2;
const SEED_NOISE: u64 = 3;
const SEED_REDUCE: u64 = 4;
const SEED_CLUSTER: u64 = 5;
const SEED_TRAIN: u64 = 6;

fn load(cfg: &ExperimentConfig) -> Result<(Dataset, Option<EmbeddingMatrix>)> {
    match &cfg.source {
        Source::Synthetic { n, dims, separation } => {
            let (x, labels) = corpus::generate_synthetic(*n, *dims, *separation, sub_seed(cfg.seed, SEED_DATA))?;
            Ok((corpus::synthetic_dataset(&labels), Some(x)))
        }
        Source::Jsonl { path } => Ok((corpus::load_dataset(path, DatasetFormat::Jsonl)?, None)),
        Source::Csv { path } => Ok((corpus::load_dataset(path, DatasetFormat::Csv)?, None)),
        Source::Embeddings { path, labels } => {
            let x = embed_io::read_embeddings(path)?;
            let d = corpus::load_dataset(labels, DatasetFormat::from_path(labels))?;
            if d.len() != x.rows() {
                return Err(Error::shape(format!("{} embedding rows vs {} labeled records", x.rows(), d.len())));
            }
            Ok((d, Some(x)))
        }
    }
}

/// Data shared by every noise level: the split, the embeddings and the
/// clustering of the rows the correction runs on.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub embeddings: EmbeddingMatrix,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Rows the correction is fitted on: the training split, or every row
    /// with `correct_test_labels`.
    pub fit_rows: Vec<usize>,
    pub reduced: EmbeddingMatrix,
    pub clusters: ClusterResult,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let (dataset, x) = load(cfg).stage("load")?;
    let (train, test) =
        corpus::split_indices(dataset.observed_labels(), cfg.test_fraction, sub_seed(cfg.seed, SEED_SPLIT))
            .stage("split")?;
    let embeddings = match x {
        Some(x) => x,
        None => {
            let train_docs: Vec<String> = train.iter().map(|&i| dataset.docs()[i].clone()).collect();
            let model = VectorizerModel::fit(&train_docs, cfg.embedding.method, cfg.embedding.features)
                .stage("embed")?;
            model.transform(dataset.docs()).stage("embed")?
        }
    };
    let fit_rows = if cfg.correct_test_labels { (0..dataset.len()).collect() } else { train.clone() };
    let reduced = cfg
        .reduction
        .apply(&embeddings.select_rows(&fit_rows), sub_seed(cfg.seed, SEED_REDUCE))
        .stage("reduce")?;
    let clusters = cfg.cluster.apply(&reduced, sub_seed(cfg.seed, SEED_CLUSTER)).stage("cluster")?;
    Ok(Prepared { dataset, embeddings, train, test, fit_rows, reduced, clusters })
}

/// Labels of one noise level over every row.
#[derive(Clone, Debug)]
struct Level {
    spec: Option<NoiseSpec>,
    /// Training labels after injection; test rows keep their observed label.
    noisy: Vec<u8>,
    /// What the correction is scored against, when known.
    reference: Option<Vec<u8>>,
    mask: Option<NoiseMask>,
}

fn make_level(cfg: &ExperimentConfig, prep: &Prepared, spec: Option<&NoiseSpec>) -> Result<Level> {
    let observed = prep.dataset.observed_labels();
    match spec {
        Some(spec) => {
            let spec = spec.with_seed(sub_seed(cfg.seed ^ spec.seed(), SEED_NOISE));
            let train_labels: Vec<u8> = prep.train.iter().map(|&i| observed[i]).collect();
            let (noisy_train, train_mask) = corpus::inject_noise(&train_labels, &spec)?;
            let mut noisy = observed.to_vec();
            let mut flipped = vec![false; observed.len()];
            for (k, &i) in prep.train.iter().enumerate() {
                noisy[i] = noisy_train[k];
                flipped[i] = train_mask.flipped[k];
            }
            Ok(Level {
                spec: Some(spec),
                noisy,
                reference: Some(observed.to_vec()),
                mask: Some(NoiseMask { flipped }),
            })
        }
        None => {
            let truth = prep.dataset.true_labels().map(<[u8]>::to_vec);
            let mask = truth.as_ref().map(|t| NoiseMask {
                flipped: observed.iter().zip(t).map(|(a, b)| a != b).collect(),
            });
            Ok(Level { spec: None, noisy: observed.to_vec(), reference: truth, mask })
        }
    }
}

struct Corrected {
    alignment: Alignment,
    /// Every row; rows outside `fit_rows` keep their noisy label.
    labels: Vec<u8>,
    /// Per fit row.
    actions: Vec<Action>,
    report: Option<CorrectionReport>,
}

fn correct_level(prep: &Prepared, level: &Level, cfg: &CorrectionConfig) -> Result<Corrected> {
    let observed_fit: Vec<u8> = prep.fit_rows.iter().map(|&i| level.noisy[i]).collect();
    let alignment = correct::align_clusters(&prep.clusters.hard_labels, &observed_fit)?;
    let (fixed, actions) = correct::correct_labels(&observed_fit, &prep.clusters.posteriors, alignment, cfg)?;
    let mut labels = level.noisy.clone();
    for (k, &i) in prep.fit_rows.iter().enumerate() {
        labels[i] = fixed[k];
    }
    let report = match (&level.reference, &level.mask) {
        (Some(reference), Some(mask)) => {
            let pick = |v: &[u8]| prep.fit_rows.iter().map(|&i| v[i]).collect::<Vec<u8>>();
            let sub_mask = NoiseMask { flipped: prep.fit_rows.iter().map(|&i| mask.flipped[i]).collect() };
            Some(correct::correction_report(&observed_fit, &fixed, &pick(reference), &sub_mask)?)
        }
        _ => None,
    };
    Ok(Corrected { alignment, labels, actions, report })
}

/// Labels of one noise level over every dataset row, before and after
/// correction.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelLabels {
    pub noisy: Vec<u8>,
    pub corrected: Vec<u8>,
    /// Labels the correction is scored against, when known.
    pub reference: Option<Vec<u8>>,
    pub alignment: Alignment,
    pub report: Option<CorrectionReport>,
}

/// Inject `spec` (or nothing) into the training split of `prep` and correct
/// at `cfg.correction`.
pub fn level_labels(cfg: &ExperimentConfig, prep: &Prepared, spec: Option<&NoiseSpec>) -> Result<LevelLabels> {
    let level = make_level(cfg, prep, spec).stage("noise")?;
    let c = correct_level(prep, &level, &cfg.correction).stage("correct")?;
    Ok(LevelLabels {
        noisy: level.noisy,
        corrected: c.labels,
        reference: level.reference,
        alignment: c.alignment,
        report: c.report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelFiles {
    pub roc_corrected: Option<String>,
    pub roc_noisy: Option<String>,
    pub roc_clean: Option<String>,
    pub corrections: String,
    pub labels: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub name: String,
    pub noise: Option<NoiseSpec>,
    pub alignment: Alignment,
    pub correction: Option<CorrectionReport>,
    pub noisy_trained: MetricSet,
    pub corrected_trained: MetricSet,
    pub clean_trained: Option<MetricSet>,
    pub files: LevelFiles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactFiles {
    pub embeddings: String,
    pub reduced: String,
    pub clusters: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// `train` or `train+test`: the rows correction statistics are computed on.
    pub correction_split: String,
    /// `observed` or `corrected`: which test labels the metrics use.
    pub evaluation_labels: String,
    pub cluster_warnings: Vec<String>,
    pub levels: Vec<LevelReport>,
    pub artifacts: ArtifactFiles,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON with the wall-clock field zeroed, for comparing runs.
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        r.to_json()
    }
}

/// A finished experiment held in memory: the report and every output file
/// keyed by its path relative to the output directory.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub files: Vec<(String, Vec<u8>)>,
}

impl ExperimentRun {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Write every artifact, then `report.json` last.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            util::write_atomic(&out_dir.join(name), bytes).stage("write")?;
        }
        util::write_atomic(&out_dir.join("report.json"), self.report.to_json().as_bytes()).stage("write")
    }
}

fn labels_csv(prep: &Prepared, level: &Level, corrected: &[u8], eval_corrected: bool) -> String {
    let test: std::collections::BTreeSet<usize> = prep.test.iter().copied().collect();
    let mut out = String::from("index,id,split,observed,noisy,corrected,evaluation,true_label\n");
    let truth = prep.dataset.true_labels();
    for i in 0..prep.dataset.len() {
        let is_test = test.contains(&i);
        let evaluation = if is_test {
            if eval_corrected {
                corrected[i].to_string()
            } else {
                prep.dataset.observed_labels()[i].to_string()
            }
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{i},{},{},{},{},{},{evaluation},{}\n",
            csv_field(&prep.dataset.ids()[i]),
            if is_test { "test" } else { "train" },
            prep.dataset.observed_labels()[i],
            level.noisy[i],
            corrected[i],
            truth.map_or(String::new(), |t| t[i].to_string()),
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `index,observed,corrected,action` with dataset row indices.
fn corrections_csv(prep: &Prepared, level: &Level, corrected: &Corrected) -> String {
    let mut out = String::from("index,observed,corrected,action\n");
    for (k, &i) in prep.fit_rows.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{}\n",
            level.noisy[i],
            corrected.labels[i],
            corrected.actions[k].as_str()
        ));
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let clock = util::Stopwatch::start();
    let prep = prepare(cfg)?;
    let specs: Vec<Option<&NoiseSpec>> =
        if cfg.noise.is_empty() { vec![None] } else { cfg.noise.iter().map(Some).collect() };

    let method = cfg.classifier.method;
    let hyper = cfg.classifier.training_config(sub_seed(cfg.seed, SEED_TRAIN));
    let x_train = prep.embeddings.select_rows(&prep.train);
    let x_test = prep.embeddings.select_rows(&prep.test);
    let observed = prep.dataset.observed_labels();

    let mut files = Vec::new();
    let mut levels = Vec::new();
    for (li, spec) in specs.iter().enumerate() {
        let level = make_level(cfg, &prep, *spec).stage("noise")?;
        let name = spec.map_or_else(|| "none".to_string(), |s| s.label());
        let dir = if li == 0 { String::new() } else { format!("levels/{li:02}-{name}/") };
        let corrected = correct_level(&prep, &level, &cfg.correction).stage("correct")?;

        let eval: Vec<u8> = prep
            .test
            .iter()
            .map(|&i| if cfg.correct_test_labels { corrected.labels[i] } else { observed[i] })
            .collect();
        let mut evaluate = |labels: &[u8], file: &str| -> Result<(MetricSet, Option<String>)> {
            let y: Vec<u8> = prep.train.iter().map(|&i| labels[i]).collect();
            let model = train_classifier(&x_train, &y, method, &hyper).stage("train")?;
            let pred = predict_scores(&model, &x_test).stage("evaluate")?;
            let (metrics, curve) = full_metrics(&pred.labels, &pred.scores, &eval).stage("evaluate")?;
            let path = curve.map(|c| {
                let path = format!("{dir}{file}");
                files.push((path.clone(), c.to_csv().into_bytes()));
                path
            });
            Ok((metrics, path))
        };
        let (noisy_trained, roc_noisy) = evaluate(&level.noisy, "roc_noisy.csv")?;
        let (corrected_trained, roc_corrected) = evaluate(&corrected.labels, "roc.csv")?;
        let (clean_trained, roc_clean) = match &level.reference {
            Some(reference) => {
                let (m, p) = evaluate(reference, "roc_clean.csv")?;
                (Some(m), p)
            }
            None => (None, None),
        };

        let corrections_path = format!("{dir}corrections.csv");
        files.push((corrections_path.clone(), corrections_csv(&prep, &level, &corrected).into_bytes()));
        let labels_path = format!("{dir}labels.csv");
        files.push((
            labels_path.clone(),
            labels_csv(&prep, &level, &corrected.labels, cfg.correct_test_labels).into_bytes(),
        ));
        levels.push(LevelReport {
            name,
            noise: level.spec.clone(),
            alignment: corrected.alignment,
            correction: corrected.report,
            noisy_trained,
            corrected_trained,
            clean_trained,
            files: LevelFiles {
                roc_corrected,
                roc_noisy,
                roc_clean,
                corrections: corrections_path,
                labels: labels_path,
            },
        });
    }

    let artifacts = ArtifactFiles {
        embeddings: "embeddings.sdem".to_string(),
        reduced: "reduced.sdem".to_string(),
        clusters: "cluster.csv".to_string(),
    };
    files.push((artifacts.embeddings.clone(), prep.embeddings.to_sdem_bytes().stage("write")?));
    files.push((artifacts.reduced.clone(), prep.reduced.to_sdem_bytes().stage("write")?));
    files.push((artifacts.clusters.clone(), prep.clusters.to_csv().into_bytes()));

    let report = ExperimentReport {
        config: cfg.clone(),
        seed: cfg.seed,
        n_train: prep.train.len(),
        n_test: prep.test.len(),
        correction_split: if cfg.correct_test_labels { "train+test" } else { "train" }.to_string(),
        evaluation_labels: if cfg.correct_test_labels { "corrected" } else { "observed" }.to_string(),
        cluster_warnings: prep.clusters.warnings.clone(),
        levels,
        artifacts,
        wall_clock_seconds: clock.seconds(),
    };
    Ok(ExperimentRun { report, files })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: String,
    pub tau: f64,
    pub n_corrected: usize,
    pub report: Option<CorrectionReport>,
    /// Fit-row positions whose label changed.
    #[serde(skip)]
    pub corrected_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub correction_split: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// `level,tau,n_corrected,n_noisy,correction_rate,false_correction_rate`;
    /// rates are blank when no reference labels are known.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,tau,n_corrected,n_noisy,correction_rate,false_correction_rate\n");
        for r in &self.rows {
            let (n_noisy, cr, fcr) = match &r.report {
                Some(rep) => (
                    rep.n_noisy.to_string(),
                    rep.correction_rate.to_string(),
                    rep.false_correction_rate.to_string(),
                ),
                None => Default::default(),
            };
            out.push_str(&format!("{},{},{},{n_noisy},{cr},{fcr}\n", r.level, r.tau, r.n_corrected));
        }
        out
    }
}

fn sweep_row(prep: &Prepared, level: &Level, name: &str, tau: f64) -> Result<SweepRow> {
    let c = correct_level(prep, level, &CorrectionConfig::with_tau(tau)).stage("correct")?;
    let corrected_rows =
        c.actions.iter().enumerate().filter(|(_, a)| **a == Action::Corrected).map(|(k, _)| k).collect::<Vec<_>>();
    Ok(SweepRow { level: name.to_string(), tau, n_corrected: corrected_rows.len(), report: c.report, corrected_rows })
}

fn split_name(cfg: &ExperimentConfig) -> String {
    if cfg.correct_test_labels { "train+test" } else { "train" }.to_string()
}

/// Correction statistics over a grid of thresholds at the config's first
/// noise level (or none). Clustering runs once.
pub fn tau_sweep(cfg: &ExperimentConfig, taus: &[f64]) -> Result<SweepReport> {
    let prep = prepare(cfg)?;
    let spec = cfg.noise.first();
    let level = make_level(cfg, &prep, spec).stage("noise")?;
    let name = spec.map_or_else(|| "none".to_string(), NoiseSpec::label);
    let mut sorted = taus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows = sorted.iter().map(|&t| sweep_row(&prep, &level, &name, t)).collect::<Result<_>>()?;
    Ok(SweepReport { correction_split: split_name(cfg), rows })
}

/// One correction report per noise level at the configured threshold;
/// `levels` defaults to [`default_noise_levels`] when empty.
pub fn noise_sweep(cfg: &ExperimentConfig, levels: &[NoiseSpec]) -> Result<SweepReport> {
    let prep = prepare(cfg)?;
    let defaults = default_noise_levels();
    let levels = if levels.is_empty() { &defaults[..] } else { levels };
    let mut rows = Vec::new();
    for spec in levels {
        spec.validate()?;
        let level = make_level(cfg, &prep, Some(spec)).stage("noise")?;
        rows.push(sweep_row(&prep, &level, &spec.label(), cfg.correction.tau)?);
    }
    Ok(SweepReport { correction_split: split_name(cfg), rows })
}
