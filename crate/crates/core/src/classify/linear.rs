use super::{ClassifierParams, TrainingConfig};
use crate::optim::Adam;
use crate::{util, EmbeddingMatrix, Result};

/// Summed binary cross-entropy plus `l2 * |w|^2` (bias unpenalized) and its
/// gradient. `params` holds the weights followed by the bias.
pub fn logistic_objective(params: &[f64], x: &EmbeddingMatrix, y: &[u8], l2: f64) -> (f64, Vec<f64>) {
    let cols = x.cols();
    let (w, b) = (&params[..cols], params[cols]);
    let mut grad = vec![0.0; cols + 1];
    let mut loss = 0.0;
    for (row, &t) in x.row_iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let t = f64::from(t);
        loss += util::softplus(z) - t * z;
        let d = util::sigmoid(z) - t;
        for (g, xi) in grad.iter_mut().zip(row) {
            *g += d * xi;
        }
        grad[cols] += d;
    }
    for j in 0..cols {
        loss += l2 * w[j] * w[j];
        grad[j] += 2.0 * l2 * w[j];
    }
    (loss, grad)
}

pub(super) fn train_logreg(
    x: &EmbeddingMatrix,
    y: &[u8],
    hyper: &TrainingConfig,
) -> Result<(ClassifierParams, Vec<f64>)> {
    let cols = x.cols();
    let mut params = vec![0.0; cols + 1];
    let mut adam = Adam::new(params.len(), hyper.learning_rate);
    let mut history = Vec::with_capacity(hyper.epochs + 1);
    for _ in 0..hyper.epochs {
        let (loss, grad) = logistic_objective(&params, x, y, hyper.l2);
        history.push(loss);
        if !loss.is_finite() {
            break;
        }
        adam.step(&mut params, &grad);
    }
    history.push(logistic_objective(&params, x, y, hyper.l2).0);
    let bias = params.pop().unwrap();
    Ok((ClassifierParams::Linear { weights: params, bias }, history))
}

/// Summed hinge loss on labels mapped to -1/+1 plus `l2 * |w|^2`, with one
/// subgradient.
fn hinge_objective(params: &[f64], x: &EmbeddingMatrix, y: &[u8], l2: f64) -> (f64, Vec<f64>) {
    let cols = x.cols();
    let (w, b) = (&params[..cols], params[cols]);
    let mut grad = vec![0.0; cols + 1];
    let mut loss = 0.0;
    for (row, &t) in x.row_iter().zip(y) {
        let s = if t == 1 { 1.0 } else { -1.0 };
        let margin = s * (b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>());
        if margin < 1.0 {
            loss += 1.0 - margin;
            for (g, xi) in grad.iter_mut().zip(row) {
                *g -= s * xi;
            }
            grad[cols] -= s;
        }
    }
    for j in 0..cols {
        loss += l2 * w[j] * w[j];
        grad[j] += 2.0 * l2 * w[j];
    }
    (loss, grad)
}

/// Normalized subgradient descent with step `lr / sqrt(t + 1)`.
pub(super) fn train_svm(
    x: &EmbeddingMatrix,
    y: &[u8],
    hyper: &TrainingConfig,
) -> Result<(ClassifierParams, Vec<f64>)> {
    let cols = x.cols();
    let mut params = vec![0.0; cols + 1];
    let mut history = Vec::with_capacity(hyper.epochs + 1);
    for t in 0..hyper.epochs {
        let (loss, grad) = hinge_objective(&params, x, y, hyper.l2);
        history.push(loss);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !loss.is_finite() || norm == 0.0 {
            break;
        }
        let step = hyper.learning_rate / ((t + 1) as f64).sqrt() / norm;
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= step * g;
        }
    }
    history.push(hinge_objective(&params, x, y, hyper.l2).0);
    let bias = params.pop().unwrap();
    Ok((ClassifierParams::Linear { weights: params, bias }, history))
}
