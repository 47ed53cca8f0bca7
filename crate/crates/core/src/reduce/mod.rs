//! Dimensionality reduction ahead of clustering.

mod autoencoder;
mod pca;
mod umap;

use serde::{Deserialize, Serialize};

pub use autoencoder::{autoencoder_fit_transform, AutoencoderModel, DEFAULT_HIDDEN};
pub use pca::{pca_fit_transform, PcaModel};
pub use umap::{exact_knn, fit_ab, fuzzy_graph, umap_fit_transform, UmapConfig};

use crate::{EmbeddingMatrix, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMethod {
    /// Pass the embeddings through unchanged.
    None,
    Pca,
    Autoencoder,
    Umap,
}

impl ReductionMethod {
    pub const NAMES: &'static [&'static str] = &["none", "pca", "autoencoder", "umap"];
}

impl std::str::FromStr for ReductionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "pca" => Ok(Self::Pca),
            "autoencoder" => Ok(Self::Autoencoder),
            "umap" => Ok(Self::Umap),
            _ => Err(Error::invalid(format!("unknown reduction method `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionConfig {
    pub method: ReductionMethod,
    pub dims: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub umap_epochs: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            method: ReductionMethod::Pca,
            dims: 2,
            hidden: DEFAULT_HIDDEN,
            epochs: 300,
            learning_rate: 1e-2,
            n_neighbors: 15,
            min_dist: 0.1,
            umap_epochs: 200,
        }
    }
}

impl ReductionConfig {
    pub fn with_method(method: ReductionMethod) -> Self {
        Self { method, ..Self::default() }
    }

    pub(crate) fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.method != ReductionMethod::None && self.dims == 0 {
            out.push("reduction.dims must be at least 1".to_string());
        }
        if self.method == ReductionMethod::Autoencoder {
            if self.hidden == 0 {
                out.push("reduction.hidden must be at least 1".to_string());
            }
            if self.epochs == 0 {
                out.push("reduction.epochs must be at least 1".to_string());
            }
            if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                out.push("reduction.learning_rate must be positive".to_string());
            }
        }
        if self.method == ReductionMethod::Umap {
            if self.n_neighbors < 2 {
                out.push("reduction.n_neighbors must be at least 2".to_string());
            }
            if !(0.0..1.0).contains(&self.min_dist) {
                out.push("reduction.min_dist must be in [0, 1)".to_string());
            }
            if self.umap_epochs == 0 {
                out.push("reduction.umap_epochs must be at least 1".to_string());
            }
        }
        out
    }

    /// Reduce `x` according to this configuration.
    pub fn apply(&self, x: &EmbeddingMatrix, seed: u64) -> Result<EmbeddingMatrix> {
        match self.method {
            ReductionMethod::None => Ok(x.clone()),
            ReductionMethod::Pca => Ok(pca_fit_transform(x, self.dims)?.1),
            ReductionMethod::Autoencoder => Ok(autoencoder_fit_transform(
                x,
                self.dims,
                self.hidden,
                self.epochs,
                self.learning_rate,
                seed,
            )?
            .1),
            ReductionMethod::Umap => umap_fit_transform(
                x,
                &UmapConfig {
                    n_neighbors: self.n_neighbors,
                    min_dist: self.min_dist,
                    n_epochs: self.umap_epochs,
                    target_dims: self.dims,
                    seed,
                },
            ),
        }
    }
}
