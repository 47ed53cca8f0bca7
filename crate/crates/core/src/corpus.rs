//! Datasets: loading, stratified splitting, label-noise injection and a
//! synthetic two-blob generator.
//!
//! Labels are binary: `1` is the positive class (suicidal in the original
//! application), `0` the negative class (depressed).

use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{util, EmbeddingMatrix, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    ids: Vec<String>,
    docs: Vec<String>,
    observed_labels: Vec<u8>,
    true_labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(
        ids: Vec<String>,
        docs: Vec<String>,
        observed_labels: Vec<u8>,
        true_labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = docs.len();
        if ids.len() != n || observed_labels.len() != n {
            return Err(Error::shape(format!(
                "{} ids, {} docs and {} labels",
                ids.len(),
                n,
                observed_labels.len()
            )));
        }
        util::check_binary(&observed_labels, "label")?;
        if let Some(t) = &true_labels {
            if t.len() != n {
                return Err(Error::shape(format!("{} true labels for {n} docs", t.len())));
            }
            util::check_binary(t, "true_label")?;
        }
        Ok(Self { ids, docs, observed_labels, true_labels })
    }

    /// Dataset without text, e.g. for precomputed embeddings.
    pub fn from_labels(observed_labels: Vec<u8>, true_labels: Option<Vec<u8>>) -> Result<Self> {
        let n = observed_labels.len();
        Self::new(
            (0..n).map(|i| i.to_string()).collect(),
            vec![String::new(); n],
            observed_labels,
            true_labels,
        )
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn docs(&self) -> &[String] {
        &self.docs
    }

    pub fn observed_labels(&self) -> &[u8] {
        &self.observed_labels
    }

    pub fn true_labels(&self) -> Option<&[u8]> {
        self.true_labels.as_deref()
    }

    /// Replace the observed labels, keeping everything else.
    pub fn with_observed_labels(&self, labels: Vec<u8>) -> Result<Self> {
        Self::new(self.ids.clone(), self.docs.clone(), labels, self.true_labels.clone())
    }

    pub fn with_true_labels(&self, labels: Option<Vec<u8>>) -> Result<Self> {
        Self::new(self.ids.clone(), self.docs.clone(), self.observed_labels.clone(), labels)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
            observed_labels: indices.iter().map(|&i| self.observed_labels[i]).collect(),
            true_labels: self
                .true_labels
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let rec = Record {
                id: Some(self.ids[i].clone()),
                text: self.docs[i].clone(),
                label: self.observed_labels[i] as i64,
                true_label: self.true_labels.as_ref().map(|t| t[i] as i64),
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Jsonl,
    Csv,
}

impl DatasetFormat {
    /// Guess from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    text: String,
    label: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_label: Option<i64>,
}

fn label_value(v: i64, line: usize, field: &str) -> Result<u8> {
    match v {
        0 | 1 => Ok(v as u8),
        _ => Err(Error::Parse {
            line,
            message: format!("{field} {v} is outside {{0,1}}"),
        }),
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    match format {
        DatasetFormat::Jsonl => parse_jsonl(&text),
        DatasetFormat::Csv => parse_csv(&text),
    }
}

fn build(records: Vec<(usize, Record)>) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let with_truth = records.iter().filter(|(_, r)| r.true_label.is_some()).count();
    if with_truth != 0 && with_truth != records.len() {
        let line = records.iter().find(|(_, r)| r.true_label.is_none()).unwrap().0;
        return Err(Error::Parse {
            line,
            message: "true_label must be present on every record or on none".into(),
        });
    }
    let mut ids = Vec::with_capacity(records.len());
    let mut docs = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut truth = Vec::with_capacity(with_truth);
    for (idx, (line, rec)) in records.into_iter().enumerate() {
        labels.push(label_value(rec.label, line, "label")?);
        if let Some(t) = rec.true_label {
            truth.push(label_value(t, line, "true_label")?);
        }
        ids.push(rec.id.unwrap_or_else(|| idx.to_string()));
        docs.push(rec.text);
    }
    Dataset::new(ids, docs, labels, (with_truth > 0).then_some(truth))
}

pub fn parse_jsonl(text: &str) -> Result<Dataset> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line)
            .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        records.push((i + 1, rec));
    }
    build(records)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut records = Vec::new();
    for row in reader.deserialize::<Record>() {
        let rec = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, message: e.to_string() }
        })?;
        // header is line 1
        records.push((records.len() + 2, rec));
    }
    build(records)
}

/// Stratified split by observed label. Returns `(train, test)`, each keeping
/// the original record order.
pub fn split_dataset(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d.observed_labels(), test_fraction, seed)?;
    Ok((d.select(&train), d.select(&test)))
}

/// Index form of [`split_dataset`].
pub fn split_indices(labels: &[u8], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::invalid("need at least 2 samples to split"));
    }
    util::check_binary(labels, "label")?;
    let total = util::round_count(test_fraction * n as f64);

    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    // Largest-remainder allocation of the test budget across classes.
    let ideal: Vec<f64> = by_class.iter().map(|c| test_fraction * c.len() as f64).collect();
    let mut alloc: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(alloc.iter().sum());
    for &c in order.iter().cycle().take(4) {
        if remaining == 0 {
            break;
        }
        if alloc[c] < by_class[c].len() {
            alloc[c] += 1;
            remaining -= 1;
        }
    }

    let mut rng = util::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if alloc[c] == 0 || alloc[c] == members.len() {
            return Err(Error::invalid(format!(
                "class {c} ({} samples) would be empty in the {} split at test fraction {test_fraction}",
                members.len(),
                if alloc[c] == 0 { "test" } else { "train" }
            )));
        }
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..alloc[c]]);
        train.extend_from_slice(&members[alloc[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// How labels get corrupted. Rates are fractions in `[0, 1]`; class-weighted
/// rates apply to each class's own population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseSpec {
    Uniform {
        rate: f64,
        #[serde(default)]
        seed: u64,
    },
    ClassWeighted {
        rate_class0: f64,
        rate_class1: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl NoiseSpec {
    pub fn seed(&self) -> u64 {
        match self {
            NoiseSpec::Uniform { seed, .. } | NoiseSpec::ClassWeighted { seed, .. } => *seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        match &mut s {
            NoiseSpec::Uniform { seed: s, .. } | NoiseSpec::ClassWeighted { seed: s, .. } => {
                *s = seed
            }
        }
        s
    }

    /// Short name such as `uniform-30` or `weighted-30-10`.
    pub fn label(&self) -> String {
        let pct = |r: f64| format!("{}", (r * 100.0).round() as i64);
        match self {
            NoiseSpec::Uniform { rate, .. } => format!("uniform-{}", pct(*rate)),
            NoiseSpec::ClassWeighted { rate_class0, rate_class1, .. } => {
                format!("weighted-{}-{}", pct(*rate_class0), pct(*rate_class1))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates: Vec<(&str, f64)> = match self {
            NoiseSpec::Uniform { rate, .. } => vec![("rate", *rate)],
            NoiseSpec::ClassWeighted { rate_class0, rate_class1, .. } => {
                vec![("rate_class0", *rate_class0), ("rate_class1", *rate_class1)]
            }
        };
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        Ok(())
    }
}

/// The indices whose label was flipped by [`inject_noise`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseMask {
    pub flipped: Vec<bool>,
}

impl NoiseMask {
    pub fn clean(n: usize) -> Self {
        Self { flipped: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.flipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flipped.is_empty()
    }

    pub fn count(&self) -> usize {
        self.flipped.iter().filter(|f| **f).count()
    }

    /// Undo the flips described by this mask.
    pub fn restore(&self, noisy: &[u8]) -> Vec<u8> {
        noisy
            .iter()
            .zip(&self.flipped)
            .map(|(&l, &f)| if f { 1 - l } else { l })
            .collect()
    }
}

/// Flip a seeded random subset of labels, sampled without replacement.
pub fn inject_noise(labels: &[u8], spec: &NoiseSpec) -> Result<(Vec<u8>, NoiseMask)> {
    util::check_binary(labels, "label")?;
    spec.validate()?;
    let n = labels.len();
    let mut rng = util::rng(spec.seed());
    let mut mask = NoiseMask::clean(n);

    let mut flip_among = |pool: Vec<usize>, rate: f64, rng: &mut rand_chacha::ChaCha8Rng| -> Result<()> {
        let count = util::round_count(rate * pool.len() as f64);
        if count > pool.len() {
            return Err(Error::invalid(format!(
                "cannot flip {count} labels out of {}",
                pool.len()
            )));
        }
        let mut pool = pool;
        pool.shuffle(rng);
        for &i in &pool[..count] {
            mask.flipped[i] = true;
        }
        Ok(())
    };

    match *spec {
        NoiseSpec::Uniform { rate, .. } => flip_among((0..n).collect(), rate, &mut rng)?,
        NoiseSpec::ClassWeighted { rate_class0, rate_class1, .. } => {
            let class = |c: u8| -> Vec<usize> { (0..n).filter(|&i| labels[i] == c).collect() };
            flip_among(class(0), rate_class0, &mut rng)?;
            flip_among(class(1), rate_class1, &mut rng)?;
        }
    }
    Ok((mask.restore(labels), mask))
}

/// Two isotropic unit-variance Gaussian blobs whose means sit at
/// `∓separation/2` on the first axis. Rows alternate between class 0 and
/// class 1.
pub fn generate_synthetic(
    n: usize,
    dims: usize,
    separation: f64,
    seed: u64,
) -> Result<(EmbeddingMatrix, Vec<u8>)> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("sample count must be even and positive, got {n}")));
    }
    if dims < 2 {
        return Err(Error::invalid(format!("need at least 2 dimensions, got {dims}")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::invalid(format!("separation must be >= 0, got {separation}")));
    }
    let mut rng = util::rng(seed);
    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let offset = if label == 1 { separation / 2.0 } else { -separation / 2.0 };
        for j in 0..dims {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(if j == 0 { z + offset } else { z });
        }
        labels.push(label);
    }
    Ok((EmbeddingMatrix::new(n, dims, data)?, labels))
}

/// A [`Dataset`] for synthetic embeddings: observed labels equal the true ones.
pub fn synthetic_dataset(labels: &[u8]) -> Dataset {
    let n = labels.len();
    Dataset::new(
        (0..n).map(|i| format!("syn-{i}")).collect(),
        vec![String::new(); n],
        labels.to_vec(),
        Some(labels.to_vec()),
    )
    .expect("synthetic labels are binary")
}
