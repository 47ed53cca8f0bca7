//! Unsupervised two-way (or k-way) clustering with per-point posteriors.
//!
//! Only the mixture model yields graded posteriors. K-means and spectral
//! clustering report one-hot rows, so any threshold below 1 accepts all of
//! their predictions.

mod gmm;
mod kmeans;
mod spectral;

use serde::{Deserialize, Serialize};

pub use gmm::{gmm_cluster, gmm_fit, GmmModel, MAX_ITER as GMM_MAX_ITER, RIDGE, TOLERANCE};
pub use kmeans::{kmeans, kmeans_cluster, KMeansFit, RESTARTS};
pub use spectral::spectral_cluster;

use crate::{EmbeddingMatrix, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    Gmm,
    Kmeans,
    Spectral,
}

impl ClusterMethod {
    pub const NAMES: &'static [&'static str] = &["gmm", "kmeans", "spectral"];
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gmm" => Ok(Self::Gmm),
            "kmeans" => Ok(Self::Kmeans),
            "spectral" => Ok(Self::Spectral),
            _ => Err(Error::invalid(format!("unknown cluster method `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub hard_labels: Vec<usize>,
    /// `rows x k`, each row summing to 1.
    pub posteriors: Vec<Vec<f64>>,
    pub method: ClusterMethod,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

impl ClusterResult {
    pub fn one_hot(hard_labels: Vec<usize>, k: usize, method: ClusterMethod) -> Self {
        let posteriors = hard_labels
            .iter()
            .map(|&l| (0..k).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { hard_labels, posteriors, method, warnings: Vec::new() }
    }

    pub fn from_posteriors(posteriors: Vec<Vec<f64>>, method: ClusterMethod) -> Self {
        let hard_labels = posteriors.iter().map(|p| argmax(p)).collect();
        Self { hard_labels, posteriors, method, warnings: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.hard_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hard_labels.is_empty()
    }

    /// `index,hard_label,posterior_0,...`
    pub fn to_csv(&self) -> String {
        let k = self.posteriors.first().map_or(2, Vec::len);
        let mut out = String::from("index,hard_label");
        for c in 0..k {
            out.push_str(&format!(",posterior_{c}"));
        }
        out.push('\n');
        for (i, (l, p)) in self.hard_labels.iter().zip(&self.posteriors).enumerate() {
            out.push_str(&format!("{i},{l}"));
            for v in p {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, method: ClusterMethod) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut hard = Vec::new();
        let mut post = Vec::new();
        for (row_no, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = row_no + 2;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse { line, message: e.to_string() })
            };
            if rec.len() < 3 {
                return Err(Error::Parse { line, message: "expected index,hard_label,posteriors...".into() });
            }
            let label: usize = rec[1]
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::Parse { line, message: e.to_string() })?;
            let p: Vec<f64> = rec.iter().skip(2).map(parse).collect::<Result<_>>()?;
            if label >= p.len() {
                return Err(Error::Parse { line, message: format!("hard label {label} out of range") });
            }
            hard.push(label);
            post.push(p);
        }
        if hard.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { hard_labels: hard, posteriors: post, method, warnings: Vec::new() })
    }
}

/// True when two labelings induce the same partition, whatever the indices.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub method: ClusterMethod,
    pub k: usize,
    /// Graph neighbors for spectral clustering.
    pub n_neighbors: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { method: ClusterMethod::Gmm, k: 2, n_neighbors: 15 }
    }
}

impl ClusterConfig {
    pub fn with_method(method: ClusterMethod) -> Self {
        Self { method, ..Self::default() }
    }

    pub(crate) fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k != 2 {
            out.push(format!("cluster.k must be 2 for binary label correction, got {}", self.k));
        }
        if self.method == ClusterMethod::Spectral && self.n_neighbors < 2 {
            out.push("cluster.n_neighbors must be at least 2".to_string());
        }
        out
    }

    pub fn apply(&self, x: &EmbeddingMatrix, seed: u64) -> Result<ClusterResult> {
        match self.method {
            ClusterMethod::Gmm => Ok(gmm_cluster(x, self.k, seed)?.1),
            ClusterMethod::Kmeans => kmeans_cluster(x, self.k, seed),
            ClusterMethod::Spectral => spectral_cluster(x, self.k, self.n_neighbors, seed),
        }
    }
}
