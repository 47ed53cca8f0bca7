use rand::Rng;

use super::{ClusterMethod, ClusterResult};
use crate::util::{self, squared_distance};
use crate::{EmbeddingMatrix, Error, Result};

pub const RESTARTS: usize = 10;
const MAX_ITER: usize = 300;

/// Outcome of one k-means fit.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

impl KMeansFit {
    /// Nearest centroid for every row; ties go to the lower centroid index.
    pub fn assign(&self, x: &EmbeddingMatrix) -> Vec<usize> {
        assign(x, &self.centroids).0
    }
}

fn assign(x: &EmbeddingMatrix, centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = x
        .row_iter()
        .map(|row| {
            let (best, d) = nearest(row, centroids);
            inertia += d;
            best
        })
        .collect();
    (labels, inertia)
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng>(x: &EmbeddingMatrix, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            while d2[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            pick
        } else {
            // every point coincides with a chosen centroid
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(x.row(i), x.row(next)));
        }
    }
    chosen.into_iter().map(|i| x.row(i).to_vec()).collect()
}

fn lloyd(x: &EmbeddingMatrix, mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let (n, d) = x.shape();
    let k = centroids.len();
    let (mut labels, mut inertia) = assign(x, &centroids);
    let mut trace = vec![inertia];
    for _ in 0..MAX_ITER {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // Re-seed empty clusters at the point farthest from its centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .map(|i| (i, squared_distance(x.row(i), &centroids[labels[i]])))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                centroids[c] = x.row(far).to_vec();
                let old = labels[far];
                counts[old] -= 1;
                labels[far] = c;
                counts[c] = 1;
            }
        }
        let (new_labels, new_inertia) = assign(x, &centroids);
        trace.push(new_inertia);
        let stable = new_labels == labels;
        labels = new_labels;
        inertia = new_inertia;
        if stable {
            break;
        }
    }
    KMeansFit { centroids, labels, inertia, inertia_trace: trace }
}

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs.
pub fn kmeans(x: &EmbeddingMatrix, k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if x.rows() < k {
        return Err(Error::invalid(format!("cannot form {k} clusters from {} rows", x.rows())));
    }
    let mut rng = util::rng(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let init = plus_plus_init(x, k, &mut rng);
        let fit = lloyd(x, init);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

pub fn kmeans_cluster(x: &EmbeddingMatrix, k: usize, seed: u64) -> Result<ClusterResult> {
    let fit = kmeans(x, k, RESTARTS, seed)?;
    Ok(ClusterResult::one_hot(fit.labels, k, ClusterMethod::Kmeans))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]])
            .unwrap()
    }

    #[test]
    fn four_points() {
        let fit = kmeans(&square(), 2, RESTARTS, 0).unwrap();
        assert_eq!(fit.inertia, 1.0);
        assert_eq!(fit.labels[0], fit.labels[1]);
        assert_eq!(fit.labels[2], fit.labels[3]);
        assert_ne!(fit.labels[0], fit.labels[2]);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let fit = kmeans(&square(), 1, RESTARTS, 3).unwrap();
        assert_eq!(fit.centroids[0], vec![5.0, 0.5]);
        assert!(fit.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn one_cluster_per_point() {
        let fit = kmeans(&square(), 4, RESTARTS, 5).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut l = fit.labels.clone();
        l.sort();
        assert_eq!(l, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicates_do_not_panic() {
        let x = EmbeddingMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let fit = kmeans(&x, 3, 2, 0).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn too_few_rows() {
        assert!(kmeans_cluster(&square(), 5, 0).is_err());
        assert!(kmeans_cluster(&square(), 0, 0).is_err());
    }

    #[test]
    fn trace_non_increasing_and_fixed_point() {
        for seed in 0..20 {
            let (x, _) = crate::corpus::generate_synthetic(120, 3, 1.5, seed).unwrap();
            let fit = kmeans(&x, 3, 1, seed).unwrap();
            assert!(fit.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            assert_eq!(fit.assign(&x), fit.labels);
        }
    }

    #[test]
    fn deterministic() {
        let (x, _) = crate::corpus::generate_synthetic(100, 4, 3.0, 2).unwrap();
        assert_eq!(kmeans_cluster(&x, 2, 8).unwrap(), kmeans_cluster(&x, 2, 8).unwrap());
    }
}
