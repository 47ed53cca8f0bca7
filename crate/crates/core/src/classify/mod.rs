//! Supervised binary classifiers: logistic regression, multinomial naive
//! Bayes, a linear SVM and a one-hidden-layer dense network.

mod linear;
mod mlp;
mod mnb;

use serde::{Deserialize, Serialize};

pub use linear::logistic_objective;
pub use mlp::{mlp_objective, MLP_HIDDEN};

use crate::nn::Network;
use crate::{util, EmbeddingMatrix, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierMethod {
    Logreg,
    Mnb,
    Svm,
    Mlp,
}

impl ClassifierMethod {
    pub const NAMES: &'static [&'static str] = &["logreg", "mnb", "svm", "mlp"];
    pub const ALL: [ClassifierMethod; 4] =
        [ClassifierMethod::Logreg, ClassifierMethod::Mnb, ClassifierMethod::Svm, ClassifierMethod::Mlp];
}

impl std::str::FromStr for ClassifierMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(Self::Logreg),
            "mnb" => Ok(Self::Mnb),
            "svm" => Ok(Self::Svm),
            "mlp" => Ok(Self::Mlp),
            _ => Err(Error::invalid(format!("unknown classifier `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on weights (logreg, svm).
    pub l2: f64,
    /// Laplace smoothing (mnb).
    pub alpha: f64,
    /// Hidden width (mlp).
    pub hidden: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { epochs: 200, learning_rate: 1e-3, l2: 1e-4, alpha: 1.0, hidden: MLP_HIDDEN, seed: 0 }
    }
}

impl TrainingConfig {
    /// Defaults with a learning rate suited to `method`: 1e-2 for logistic
    /// regression, 1e-1 for the SVM subgradient steps, 1e-3 otherwise.
    pub fn for_method(method: ClassifierMethod) -> Self {
        let learning_rate = match method {
            ClassifierMethod::Logreg => 1e-2,
            ClassifierMethod::Svm => 1e-1,
            ClassifierMethod::Mnb | ClassifierMethod::Mlp => 1e-3,
        };
        Self { learning_rate, ..Self::default() }
    }

    pub(crate) fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.epochs == 0 {
            out.push("classifier.epochs must be at least 1".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            out.push("classifier.learning_rate must be positive".to_string());
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            out.push("classifier.l2 must be non-negative".to_string());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            out.push("classifier.alpha must be positive".to_string());
        }
        if self.hidden == 0 {
            out.push("classifier.hidden must be at least 1".to_string());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierParams {
    /// `score = w·x + b` (probability through a sigmoid for logreg, margin for svm).
    Linear { weights: Vec<f64>, bias: f64 },
    NaiveBayes {
        class_log_prior: [f64; 2],
        /// `2 x cols`, row-major.
        feature_log_prob: Vec<f64>,
    },
    Dense { network: Network },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub method: ClassifierMethod,
    pub n_features: usize,
    pub params: ClassifierParams,
    pub training_config: TrainingConfig,
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    /// Probability of class 1, or the signed margin for the SVM.
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

fn check_training_data(x: &EmbeddingMatrix, y: &[u8]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::shape(format!("{} rows vs {} labels", x.rows(), y.len())));
    }
    util::check_binary(y, "label")?;
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::invalid("training labels must contain both classes"));
    }
    Ok(())
}

pub fn train_classifier(
    x: &EmbeddingMatrix,
    y: &[u8],
    method: ClassifierMethod,
    hyper: &TrainingConfig,
) -> Result<ClassifierModel> {
    check_training_data(x, y)?;
    let problems = hyper.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let (params, loss_history) = match method {
        ClassifierMethod::Logreg => linear::train_logreg(x, y, hyper)?,
        ClassifierMethod::Svm => linear::train_svm(x, y, hyper)?,
        ClassifierMethod::Mnb => mnb::train(x, y, hyper.alpha)?,
        ClassifierMethod::Mlp => mlp::train(x, y, hyper)?,
    };
    if loss_history.iter().any(|l| !l.is_finite()) {
        return Err(Error::Diverged(format!("{method:?} training loss became non-finite")));
    }
    Ok(ClassifierModel { method, n_features: x.cols(), params, training_config: hyper.clone(), loss_history })
}

impl ClassifierModel {
    pub fn scores(&self, x: &EmbeddingMatrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::shape(format!(
                "model trained on {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(match &self.params {
            ClassifierParams::Linear { weights, bias } => x
                .row_iter()
                .map(|r| {
                    let z = bias + r.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
                    if self.method == ClassifierMethod::Svm {
                        z
                    } else {
                        util::sigmoid(z)
                    }
                })
                .collect(),
            ClassifierParams::NaiveBayes { class_log_prior, feature_log_prob } => x
                .row_iter()
                .map(|r| mnb::posterior(class_log_prior, feature_log_prob, r)[1])
                .collect(),
            ClassifierParams::Dense { network } => {
                x.row_iter().map(|r| util::sigmoid(network.forward(r)[0])).collect()
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Scores and 0/1 predictions: probability above 0.5, or positive SVM margin.
pub fn predict_scores(model: &ClassifierModel, x: &EmbeddingMatrix) -> Result<Predictions> {
    let scores = model.scores(x)?;
    let cut = if model.method == ClassifierMethod::Svm { 0.0 } else { 0.5 };
    let labels = scores.iter().map(|&s| u8::from(s > cut)).collect();
    Ok(Predictions { scores, labels })
}
