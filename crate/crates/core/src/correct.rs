//! Confidence-thresholded label correction.
//!
//! Cluster indices are first mapped onto classes by majority vote against the
//! observed labels. A label is then overwritten by the mapped cluster
//! prediction when that prediction's posterior is strictly greater than `tau`.

use serde::{Deserialize, Serialize};

use crate::cluster::argmax;
use crate::corpus::NoiseMask;
use crate::{util, Error, Result};

pub const DEFAULT_TAU: f64 = 0.9;

/// Mapping from the two cluster indices onto class labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    /// cluster 0 -> class 0, cluster 1 -> class 1
    Identity,
    /// cluster 0 -> class 1, cluster 1 -> class 0
    Swap,
}

impl Alignment {
    pub fn class_of(self, cluster: usize) -> u8 {
        let c = cluster as u8;
        match self {
            Alignment::Identity => c,
            Alignment::Swap => 1 - c,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentRule {
    #[default]
    MajorityVote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    pub tau: f64,
    pub alignment: AlignmentRule,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU, alignment: AlignmentRule::MajorityVote }
    }
}

impl CorrectionConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self { tau, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid(format!("tau must be in [0, 1], got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Kept,
    Corrected,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Kept => "kept",
            Action::Corrected => "corrected",
        }
    }
}

/// Pick the cluster-to-class mapping that agrees with more observed labels.
/// An exact tie keeps the identity mapping.
pub fn align_clusters(hard_labels: &[usize], observed: &[u8]) -> Result<Alignment> {
    if hard_labels.is_empty() {
        return Err(Error::invalid("cannot align empty label vectors"));
    }
    if hard_labels.len() != observed.len() {
        return Err(Error::shape(format!(
            "{} cluster labels vs {} observed labels",
            hard_labels.len(),
            observed.len()
        )));
    }
    util::check_binary(observed, "observed")?;
    if let Some(l) = hard_labels.iter().find(|&&l| l > 1) {
        return Err(Error::invalid(format!("cluster index {l} outside {{0,1}}")));
    }
    let identity = hard_labels.iter().zip(observed).filter(|(h, o)| **h == **o as usize).count();
    let swap = hard_labels.len() - identity;
    Ok(if swap > identity { Alignment::Swap } else { Alignment::Identity })
}

pub fn correct_labels(
    observed: &[u8],
    posteriors: &[Vec<f64>],
    alignment: Alignment,
    cfg: &CorrectionConfig,
) -> Result<(Vec<u8>, Vec<Action>)> {
    cfg.validate()?;
    util::check_binary(observed, "observed")?;
    if observed.len() != posteriors.len() {
        return Err(Error::shape(format!(
            "{} labels vs {} posterior rows",
            observed.len(),
            posteriors.len()
        )));
    }
    let mut corrected = Vec::with_capacity(observed.len());
    let mut actions = Vec::with_capacity(observed.len());
    for (i, (&obs, p)) in observed.iter().zip(posteriors).enumerate() {
        if p.len() != 2 {
            return Err(Error::shape(format!("posterior row {i} has {} entries, expected 2", p.len())));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || p.iter().any(|v| !(0.0..=1.0 + 1e-12).contains(v)) {
            return Err(Error::invalid(format!("posterior row {i} is not a distribution: {p:?}")));
        }
        let cluster = argmax(p);
        let predicted = alignment.class_of(cluster);
        if p[cluster] > cfg.tau && predicted != obs {
            corrected.push(predicted);
            actions.push(Action::Corrected);
        } else {
            corrected.push(obs);
            actions.push(Action::Kept);
        }
    }
    Ok((corrected, actions))
}

/// How well a correction undid injected noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub n_corrected: usize,
    pub n_noisy: usize,
    pub n_clean: usize,
    /// Fraction of injected-noise labels that now equal the true label.
    pub correction_rate: f64,
    /// Fraction of clean labels that now differ from the true label.
    pub false_correction_rate: f64,
    /// Set when there were no noisy labels, so `correction_rate` is a placeholder 0.
    pub correction_rate_undefined: bool,
    /// Set when there were no clean labels, so `false_correction_rate` is a placeholder 0.
    pub false_correction_rate_undefined: bool,
    #[serde(skip)]
    pub per_index_action: Vec<Action>,
}

pub fn correction_report(
    observed: &[u8],
    corrected: &[u8],
    true_labels: &[u8],
    mask: &NoiseMask,
) -> Result<CorrectionReport> {
    let n = observed.len();
    if corrected.len() != n || true_labels.len() != n || mask.len() != n {
        return Err(Error::shape(format!(
            "lengths differ: observed {n}, corrected {}, true {}, mask {}",
            corrected.len(),
            true_labels.len(),
            mask.len()
        )));
    }
    let mut restored = 0;
    let mut broken = 0;
    let mut n_noisy = 0;
    let mut actions = Vec::with_capacity(n);
    for i in 0..n {
        if mask.flipped[i] {
            n_noisy += 1;
            restored += usize::from(corrected[i] == true_labels[i]);
        } else {
            broken += usize::from(corrected[i] != true_labels[i]);
        }
        actions.push(if corrected[i] != observed[i] { Action::Corrected } else { Action::Kept });
    }
    let n_clean = n - n_noisy;
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(CorrectionReport {
        n_corrected: actions.iter().filter(|a| **a == Action::Corrected).count(),
        n_noisy,
        n_clean,
        correction_rate: rate(restored, n_noisy),
        false_correction_rate: rate(broken, n_clean),
        correction_rate_undefined: n_noisy == 0,
        false_correction_rate_undefined: n_clean == 0,
        per_index_action: actions,
    })
}

/// `index,observed,corrected,action`
pub fn corrections_csv(observed: &[u8], corrected: &[u8], actions: &[Action]) -> String {
    let mut out = String::from("index,observed,corrected,action\n");
    for (i, ((o, c), a)) in observed.iter().zip(corrected).zip(actions).enumerate() {
        out.push_str(&format!("{i},{o},{c},{}\n", a.as_str()));
    }
    out
}
