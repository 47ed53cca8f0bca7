use super::ClassifierParams;
use crate::{util, EmbeddingMatrix, Error, Result};

/// Multinomial naive Bayes on nonnegative count-like features with Laplace
/// smoothing `alpha`.
pub(super) fn train(x: &EmbeddingMatrix, y: &[u8], alpha: f64) -> Result<(ClassifierParams, Vec<f64>)> {
    if let Some(pos) = x.as_slice().iter().position(|v| *v < 0.0) {
        return Err(Error::invalid(format!(
            "naive Bayes needs nonnegative features, found {} at row {} col {}",
            x.as_slice()[pos],
            pos / x.cols(),
            pos % x.cols()
        )));
    }
    let cols = x.cols();
    let mut counts = vec![0.0; 2 * cols];
    let mut n_class = [0usize; 2];
    for (row, &t) in x.row_iter().zip(y) {
        let c = usize::from(t);
        n_class[c] += 1;
        for (acc, v) in counts[c * cols..(c + 1) * cols].iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = y.len() as f64;
    let class_log_prior = [(n_class[0] as f64 / n).ln(), (n_class[1] as f64 / n).ln()];
    let mut feature_log_prob = vec![0.0; 2 * cols];
    for c in 0..2 {
        let block = &counts[c * cols..(c + 1) * cols];
        let total = block.iter().sum::<f64>() + alpha * cols as f64;
        for j in 0..cols {
            feature_log_prob[c * cols + j] = ((block[j] + alpha) / total).ln();
        }
    }
    // mean negative log posterior of the training labels
    let nll = x
        .row_iter()
        .zip(y)
        .map(|(row, &t)| -log_posterior(&class_log_prior, &feature_log_prob, row)[usize::from(t)])
        .sum::<f64>()
        / n;
    Ok((ClassifierParams::NaiveBayes { class_log_prior, feature_log_prob }, vec![nll]))
}

pub(super) fn log_posterior(prior: &[f64; 2], flp: &[f64], row: &[f64]) -> [f64; 2] {
    let cols = row.len();
    let joint: Vec<f64> = (0..2)
        .map(|c| prior[c] + row.iter().zip(&flp[c * cols..(c + 1) * cols]).map(|(v, l)| v * l).sum::<f64>())
        .collect();
    let norm = util::log_sum_exp(&joint);
    [joint[0] - norm, joint[1] - norm]
}

pub(super) fn posterior(prior: &[f64; 2], flp: &[f64], row: &[f64]) -> [f64; 2] {
    let lp = log_posterior(prior, flp, row);
    [lp[0].exp(), lp[1].exp()]
}
