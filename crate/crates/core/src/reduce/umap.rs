//! UMAP layout: exact k-NN graph, fuzzy memberships with per-point bandwidth,
//! fuzzy union symmetrization, and stochastic attraction/repulsion updates in
//! the low-dimensional space. The layout starts from a PCA projection so the
//! whole procedure is reproducible from the seed.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pca::PcaModel;
use crate::{util, EmbeddingMatrix, Error, Result};

const NEGATIVE_SAMPLE_RATE: f64 = 5.0;
const GRAD_CLIP: f64 = 4.0;
const INIT_SCALE: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmapConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_epochs: usize,
    pub target_dims: usize,
    pub seed: u64,
}

impl Default for UmapConfig {
    fn default() -> Self {
        Self { n_neighbors: 15, min_dist: 0.1, n_epochs: 200, target_dims: 2, seed: 0 }
    }
}

impl UmapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors < 2 {
            return Err(Error::invalid("n_neighbors must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.min_dist) {
            return Err(Error::invalid(format!("min_dist must be in [0, 1), got {}", self.min_dist)));
        }
        if self.target_dims == 0 {
            return Err(Error::invalid("target_dims must be at least 1"));
        }
        if self.n_epochs == 0 {
            return Err(Error::invalid("n_epochs must be at least 1"));
        }
        Ok(())
    }
}

/// Indices and distances of the `k` nearest other rows of every row, nearest
/// first. Ties go to the lower index.
pub fn exact_knn(x: &EmbeddingMatrix, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = x.rows();
    (0..n)
        .map(|i| {
            let mut cands: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, util::squared_distance(x.row(i), x.row(j))))
                .collect();
            let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
            if k < cands.len() {
                cands.select_nth_unstable_by(k, cmp);
                cands.truncate(k);
            }
            cands.sort_by(cmp);
            cands.into_iter().map(|(j, d2)| (j, d2.sqrt())).collect()
        })
        .collect()
}

/// Bandwidth `sigma` and offset `rho` such that
/// `sum_j exp(-(d_j - rho)+ / sigma) = log2(k)`.
fn smooth_knn(dists: &[f64], mean_distance: f64) -> (f64, f64) {
    let target = (dists.len() as f64).log2();
    let rho = dists.iter().copied().find(|d| *d > 0.0).unwrap_or(0.0);
    let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
    for _ in 0..64 {
        let psum: f64 = dists.iter().map(|d| (-(d - rho).max(0.0) / mid).exp()).sum();
        if (psum - target).abs() < 1e-5 {
            break;
        }
        if psum > target {
            hi = mid;
            mid = (lo + hi) / 2.0;
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
        }
    }
    let floor = 1e-3 * mean_distance;
    (mid.max(floor).max(f64::MIN_POSITIVE), rho)
}

/// Symmetrized fuzzy graph as directed edges `(head, tail, weight)`, both
/// directions present, ordered by `(head, tail)`.
pub fn fuzzy_graph(x: &EmbeddingMatrix, n_neighbors: usize) -> Vec<(usize, usize, f64)> {
    let knn = exact_knn(x, n_neighbors);
    let total: f64 = knn.iter().flatten().map(|(_, d)| d).sum();
    let mean_distance = total / (knn.len() * n_neighbors).max(1) as f64;

    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, nbrs) in knn.iter().enumerate() {
        let dists: Vec<f64> = nbrs.iter().map(|(_, d)| *d).collect();
        let (sigma, rho) = smooth_knn(&dists, mean_distance);
        for &(j, d) in nbrs {
            directed.insert((i, j), (-(d - rho).max(0.0) / sigma).exp());
        }
    }
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &a) in &directed {
        let b = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let w = a + b - a * b;
        sym.insert((i, j), w);
        sym.insert((j, i), w);
    }
    sym.into_iter().map(|((i, j), w)| (i, j, w)).collect()
}

/// Least-squares fit of `1 / (1 + a x^(2b))` to the target curve that is 1
/// below `min_dist` and `exp(-(x - min_dist))` above it (unit spread).
pub fn fit_ab(min_dist: f64) -> (f64, f64) {
    let spread = 1.0;
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let residuals = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };

    // Levenberg-Marquardt on (a, b).
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cost = residuals(a, b);
    for _ in 0..200 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let u = x.powf(2.0 * b);
            let denom = 1.0 + a * u;
            let r = 1.0 / denom - y;
            let da = -u / (denom * denom);
            let db = -a * u * 2.0 * x.ln() / (denom * denom);
            let j = [da, db];
            for p in 0..2 {
                jtr[p] += j[p] * r;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let m = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
            let step_b = -(m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let c = residuals(na, nb);
                if c < cost {
                    let done = (cost - c) < 1e-15 * cost.max(1e-300);
                    a = na;
                    b = nb;
                    cost = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = !done;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

pub fn umap_fit_transform(x: &EmbeddingMatrix, cfg: &UmapConfig) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    let n = x.rows();
    if cfg.n_neighbors >= n {
        return Err(Error::invalid(format!(
            "n_neighbors ({}) must be smaller than the number of rows ({n})",
            cfg.n_neighbors
        )));
    }
    let dims = cfg.target_dims;
    if dims > (n - 1).min(x.cols()) {
        return Err(Error::invalid(format!(
            "cannot lay out {n}x{} data in {dims} dimensions",
            x.cols()
        )));
    }

    let mut edges = fuzzy_graph(x, cfg.n_neighbors);
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    edges.retain(|e| e.2 >= max_w / cfg.n_epochs as f64 && e.2 > 0.0);

    // PCA initialization, rescaled to a [-10, 10] box.
    let pca = PcaModel::fit(x, dims)?;
    let mut layout = pca.transform(x)?;
    let extent = layout.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if extent > 0.0 {
        let s = INIT_SCALE / extent;
        for i in 0..n {
            layout.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
    }
    let mut y = layout.into_vec();

    let (a, b) = fit_ab(cfg.min_dist);
    let eps: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let eps_neg: Vec<f64> = eps.iter().map(|e| e / NEGATIVE_SAMPLE_RATE).collect();
    let mut next_sample = eps.clone();
    let mut next_neg = eps_neg.clone();
    let mut rng = util::rng(cfg.seed);
    let mut current = vec![0.0; dims];
    let mut other = vec![0.0; dims];

    for epoch in 0..cfg.n_epochs {
        let alpha = 1.0 - epoch as f64 / cfg.n_epochs as f64;
        let ep = epoch as f64;
        for (e, &(head, tail, _)) in edges.iter().enumerate() {
            if next_sample[e] > ep {
                continue;
            }
            current.copy_from_slice(&y[head * dims..(head + 1) * dims]);
            other.copy_from_slice(&y[tail * dims..(tail + 1) * dims]);
            let d2 = util::squared_distance(&current, &other);
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            for k in 0..dims {
                let g = clip(coeff * (current[k] - other[k]));
                current[k] += g * alpha;
                other[k] -= g * alpha;
            }
            y[tail * dims..(tail + 1) * dims].copy_from_slice(&other);
            next_sample[e] += eps[e];

            let n_neg = ((ep - next_neg[e]) / eps_neg[e]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let k_idx = rng.random_range(0..n);
                if k_idx == head {
                    continue;
                }
                let o = &y[k_idx * dims..(k_idx + 1) * dims];
                let d2 = util::squared_distance(&current, o);
                if d2 > 0.0 {
                    let coeff = 2.0 * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0));
                    for k in 0..dims {
                        current[k] += clip(coeff * (current[k] - o[k])) * alpha;
                    }
                } else {
                    for c in current.iter_mut() {
                        *c += GRAD_CLIP * alpha;
                    }
                }
            }
            next_neg[e] += n_neg as f64 * eps_neg[e];
            y[head * dims..(head + 1) * dims].copy_from_slice(&current);
        }
    }
    EmbeddingMatrix::new(n, dims, y)
        .map_err(|_| Error::Diverged("UMAP layout produced non-finite coordinates".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ab_for_default_min_dist() {
        // reference values from the standard curve fit at min_dist = 0.1
        let (a, b) = fit_ab(0.1);
        assert!((a - 1.577).abs() < 0.02, "a = {a}");
        assert!((b - 0.895).abs() < 0.01, "b = {b}");
    }

    #[test]
    fn knn_is_sorted_and_excludes_self() {
        let x = EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0], vec![7.0]]).unwrap();
        let knn = exact_knn(&x, 2);
        assert_eq!(knn[0], vec![(1, 1.0), (2, 3.0)]);
        assert_eq!(knn[2], vec![(1, 2.0), (0, 3.0)]);
    }

    #[test]
    fn memberships_hit_log2_k() {
        let dists = [0.5, 0.9, 1.3, 2.0, 2.2];
        let (sigma, rho) = smooth_knn(&dists, 1.0);
        let total: f64 = dists.iter().map(|d| (-(d - rho).max(0.0) / sigma).exp()).sum();
        assert!((total - 5f64.log2()).abs() < 1e-4);
        assert_eq!(rho, 0.5);
    }

    #[test]
    fn graph_is_symmetric_fuzzy_union() {
        let (x, _) = crate::corpus::generate_synthetic(40, 3, 2.0, 3).unwrap();
        let g = fuzzy_graph(&x, 5);
        let map: BTreeMap<(usize, usize), f64> = g.iter().map(|&(i, j, w)| ((i, j), w)).collect();
        for (&(i, j), &w) in &map {
            assert_eq!(map[&(j, i)], w);
            assert!(w > 0.0 && w <= 1.0);
        }
    }

    #[test]
    fn rows_must_exceed_neighbors() {
        let x = EmbeddingMatrix::zeros(5, 3);
        let cfg = UmapConfig { n_neighbors: 5, ..Default::default() };
        assert!(umap_fit_transform(&x, &cfg).is_err());
        let cfg = UmapConfig { n_neighbors: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    fn blobs(n: usize, sep: f64, seed: u64) -> (EmbeddingMatrix, Vec<u8>) {
        crate::corpus::generate_synthetic(n, 8, sep, seed).unwrap()
    }

    #[test]
    fn deterministic() {
        let (x, _) = blobs(80, 6.0, 4);
        let cfg = UmapConfig { n_neighbors: 10, n_epochs: 50, seed: 9, ..Default::default() };
        assert_eq!(umap_fit_transform(&x, &cfg).unwrap(), umap_fit_transform(&x, &cfg).unwrap());
    }

    #[test]
    fn separated_blobs_stay_pure() {
        let (x, labels) = blobs(200, 20.0, 1);
        let out = umap_fit_transform(&x, &UmapConfig::default()).unwrap();
        assert_eq!(out.shape(), (200, 2));
        let nn = exact_knn(&out, 1);
        for (i, nbrs) in nn.iter().enumerate() {
            assert_eq!(labels[nbrs[0].0], labels[i], "point {i}");
        }
    }
}
