//! Unsupervised correction of noisy binary labels.
//!
//! Documents are embedded (classical vectorizers here, or externally
//! produced transformer vectors read through [`embed_io`]), reduced to a few
//! dimensions, clustered into two groups, and the cluster predictions
//! overwrite an observed label wherever the cluster posterior is above a
//! confidence threshold. The corrected labels then train an ordinary
//! supervised classifier.
//!
//! ```
//! use labelmend::{cluster, correct, corpus, reduce};
//!
//! let (x, truth) = corpus::generate_synthetic(200, 8, 8.0, 7).unwrap();
//! let spec = corpus::NoiseSpec::Uniform { rate: 0.2, seed: 1 };
//! let (noisy, _mask) = corpus::inject_noise(&truth, &spec).unwrap();
//!
//! let (_, reduced) = reduce::pca_fit_transform(&x, 2).unwrap();
//! let (_, clusters) = cluster::gmm_cluster(&reduced, 2, 3).unwrap();
//! let alignment = correct::align_clusters(&clusters.hard_labels, &noisy).unwrap();
//! let cfg = correct::CorrectionConfig::default();
//! let (fixed, _) = correct::correct_labels(&noisy, &clusters.posteriors, alignment, &cfg).unwrap();
//!
//! let wrong_before = noisy.iter().zip(&truth).filter(|(a, b)| a != b).count();
//! let wrong_after = fixed.iter().zip(&truth).filter(|(a, b)| a != b).count();
//! assert!(wrong_after < wrong_before);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod cluster;
pub mod corpus;
pub mod correct;
pub mod embed_io;
mod error;
pub mod metrics;
pub mod nn;
mod optim;
pub mod pipeline;
pub mod reduce;
mod util;
pub mod vectorize;

pub use embed_io::EmbeddingMatrix;
pub use error::{Error, Result};
pub use util::write_atomic;
