//! Full-covariance Gaussian mixture fitted by expectation-maximization.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, RESTARTS};
use super::{ClusterMethod, ClusterResult};
use crate::util::log_sum_exp;
use crate::{EmbeddingMatrix, Error, Result};

pub const RIDGE: f64 = 1e-6;
pub const MAX_ITER: usize = 200;
pub const TOLERANCE: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// `d x d` row-major covariance per component.
    pub covariances: Vec<Vec<f64>>,
    /// Log-likelihood of the data under the parameters entering each E-step.
    pub log_likelihood_trace: Vec<f64>,
}

/// Precomputed Cholesky factor for evaluating one component's log density.
struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    chol_lower: DMatrix<f64>,
    log_norm: f64,
}

impl Component {
    fn new(index: usize, weight: f64, mean: &[f64], cov: &[f64]) -> Result<Self> {
        let d = mean.len();
        let m = DMatrix::from_row_slice(d, d, cov);
        let chol: Cholesky<f64, Dyn> = Cholesky::new(m).ok_or(Error::SingularComponent(index))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::SingularComponent(index));
        }
        Ok(Self {
            log_weight: weight.ln(),
            mean: mean.to_vec(),
            chol_lower: l,
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
        })
    }

    /// `ln(weight) + ln N(x | mean, cov)`.
    fn weighted_log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L z = x - mean
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            for j in 0..i {
                s -= self.chol_lower[(i, j)] * scratch[j];
            }
            let z = s / self.chol_lower[(i, i)];
            scratch[i] = z;
            maha += z * z;
        }
        self.log_weight + self.log_norm - 0.5 * maha
    }
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::shape("weights, means and covariances must have one entry per component"));
        }
        let d = means[0].len();
        if means.iter().any(|m| m.len() != d) || covariances.iter().any(|c| c.len() != d * d) {
            return Err(Error::shape("inconsistent component dimensions"));
        }
        let model = Self { weights, means, covariances, log_likelihood_trace: Vec::new() };
        model.components()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means[0].len()
    }

    fn components(&self) -> Result<Vec<Component>> {
        (0..self.k())
            .map(|c| Component::new(c, self.weights[c], &self.means[c], &self.covariances[c]))
            .collect()
    }

    /// Log of the weighted density of every component at `x`.
    pub fn component_log_densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let comps = self.components()?;
        let mut scratch = vec![0.0; self.dims()];
        Ok(comps.iter().map(|c| c.weighted_log_density(x, &mut scratch)).collect())
    }

    /// Posterior responsibilities for every row plus the total log-likelihood.
    pub fn e_step(&self, x: &EmbeddingMatrix) -> Result<(Vec<Vec<f64>>, f64)> {
        if x.cols() != self.dims() {
            return Err(Error::shape(format!("model has {} dims, data {}", self.dims(), x.cols())));
        }
        let comps = self.components()?;
        let mut scratch = vec![0.0; self.dims()];
        let mut ll = 0.0;
        let mut resp = Vec::with_capacity(x.rows());
        let mut logs = vec![0.0; self.k()];
        for row in x.row_iter() {
            for (l, c) in logs.iter_mut().zip(&comps) {
                *l = c.weighted_log_density(row, &mut scratch);
            }
            let lse = log_sum_exp(&logs);
            ll += lse;
            let mut r: Vec<f64> = logs.iter().map(|l| (l - lse).exp()).collect();
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= s);
            resp.push(r);
        }
        Ok((resp, ll))
    }

    pub fn predict_proba(&self, x: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
        Ok(self.e_step(x)?.0)
    }

    fn m_step(x: &EmbeddingMatrix, resp: &[Vec<f64>], k: usize) -> Self {
        let (n, d) = x.shape();
        let mut nk = vec![0.0; k];
        let mut means = vec![vec![0.0; d]; k];
        for (row, r) in x.row_iter().zip(resp) {
            for c in 0..k {
                nk[c] += r[c];
                for (m, v) in means[c].iter_mut().zip(row) {
                    *m += r[c] * v;
                }
            }
        }
        for c in 0..k {
            let denom = nk[c].max(f64::MIN_POSITIVE);
            means[c].iter_mut().for_each(|m| *m /= denom);
        }
        let mut covs = vec![vec![0.0; d * d]; k];
        let mut diff = vec![0.0; d];
        for (row, r) in x.row_iter().zip(resp) {
            for c in 0..k {
                if r[c] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    diff[j] = row[j] - means[c][j];
                }
                for a in 0..d {
                    for b in a..d {
                        covs[c][a * d + b] += r[c] * diff[a] * diff[b];
                    }
                }
            }
        }
        for c in 0..k {
            let denom = nk[c].max(f64::MIN_POSITIVE);
            for a in 0..d {
                for b in a..d {
                    let v = covs[c][a * d + b] / denom + if a == b { RIDGE } else { 0.0 };
                    covs[c][a * d + b] = v;
                    covs[c][b * d + a] = v;
                }
            }
        }
        let total: f64 = nk.iter().sum();
        let weights = nk.iter().map(|w| w / total).collect::<Vec<_>>();
        debug_assert!((total - n as f64).abs() < 1e-6 * n as f64);
        Self { weights, means, covariances: covs, log_likelihood_trace: Vec::new() }
    }
}

/// EM from a k-means start. Stops after [`MAX_ITER`] E-steps or when the
/// log-likelihood gain falls below [`TOLERANCE`]; the returned posteriors are
/// the responsibilities of the final parameters.
pub fn gmm_fit(x: &EmbeddingMatrix, k: usize, seed: u64) -> Result<(GmmModel, Vec<Vec<f64>>)> {
    let (n, d) = x.shape();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if d == 0 {
        return Err(Error::invalid("cannot fit a mixture to zero-width data"));
    }
    if n < k * d || n < k {
        return Err(Error::invalid(format!(
            "{n} rows are too few for {k} full-covariance components in {d} dimensions"
        )));
    }
    let init = kmeans(x, k, RESTARTS, seed)?;
    let hard: Vec<Vec<f64>> = init
        .labels
        .iter()
        .map(|&l| (0..k).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut model = GmmModel::m_step(x, &hard, k);
    // k-means centroids are exactly the hard-assignment means; keep them.
    model.means = init.centroids;

    let mut trace = Vec::new();
    let mut resp;
    loop {
        let (r, ll) = model.e_step(x)?;
        resp = r;
        let converged = trace.last().is_some_and(|prev: &f64| ll - prev < TOLERANCE);
        trace.push(ll);
        if converged || trace.len() >= MAX_ITER {
            break;
        }
        model = GmmModel::m_step(x, &resp, k);
    }
    model.log_likelihood_trace = trace;
    Ok((model, resp))
}

pub fn gmm_cluster(x: &EmbeddingMatrix, k: usize, seed: u64) -> Result<(GmmModel, ClusterResult)> {
    let (model, resp) = gmm_fit(x, k, seed)?;
    Ok((model, ClusterResult::from_posteriors(resp, ClusterMethod::Gmm)))
}
