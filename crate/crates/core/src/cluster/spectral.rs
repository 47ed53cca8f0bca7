//! Spectral clustering on a symmetric k-NN graph with a Gaussian kernel.
//!
//! The kernel bandwidth is the median k-NN distance. The `k` eigenvectors of
//! the symmetric normalized Laplacian with the smallest eigenvalues are
//! row-normalized and clustered with k-means.

use nalgebra::{DMatrix, SymmetricEigen};

use super::kmeans::{kmeans, RESTARTS};
use super::{ClusterMethod, ClusterResult};
use crate::reduce::exact_knn;
use crate::{EmbeddingMatrix, Error, Result};

fn connected_components(adj: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for start in 0..adj.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

pub fn spectral_cluster(
    x: &EmbeddingMatrix,
    k: usize,
    n_neighbors: usize,
    seed: u64,
) -> Result<ClusterResult> {
    let n = x.rows();
    if n_neighbors < 2 || n_neighbors >= n {
        return Err(Error::invalid(format!(
            "need 2 <= n_neighbors < rows, got n_neighbors={n_neighbors} with {n} rows"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} rows")));
    }

    let knn = exact_knn(x, n_neighbors);
    let mut all: Vec<f64> = knn.iter().flatten().map(|(_, d)| *d).collect();
    all.sort_by(f64::total_cmp);
    let median = if all.len() % 2 == 1 {
        all[all.len() / 2]
    } else {
        0.5 * (all[all.len() / 2 - 1] + all[all.len() / 2])
    };
    let bandwidth = if median > 0.0 { median } else { 1.0 };

    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut adj = vec![Vec::new(); n];
    for (i, nbrs) in knn.iter().enumerate() {
        for &(j, d) in nbrs {
            let a = (-(d * d) / (2.0 * bandwidth * bandwidth)).exp();
            if w[(i, j)] == 0.0 {
                adj[i].push(j);
                adj[j].push(i);
            }
            w[(i, j)] = a;
            w[(j, i)] = a;
        }
    }
    let components = connected_components(&adj);

    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| if *d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if w[(i, j)] != 0.0 {
                lap[(i, j)] -= inv_sqrt[i] * w[(i, j)] * inv_sqrt[j];
            }
        }
    }
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut embedding = Vec::with_capacity(n * k);
    for i in 0..n {
        let row: Vec<f64> = order[..k].iter().map(|&c| eig.eigenvectors[(i, c)]).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        embedding.extend(row.iter().map(|v| if norm > 0.0 { v / norm } else { 0.0 }));
    }
    let embedding = EmbeddingMatrix::new(n, k, embedding)?;
    let fit = kmeans(&embedding, k, RESTARTS, seed)?;

    let mut result = ClusterResult::one_hot(fit.labels, k, ClusterMethod::Spectral);
    if components > k {
        result.warnings.push(format!(
            "affinity graph has {components} connected components, more than k={k}"
        ));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::same_partition;

    #[test]
    fn separated_blobs_in_full_dimension() {
        let (x, labels) = crate::corpus::generate_synthetic(60, 32, 20.0, 6).unwrap();
        let res = spectral_cluster(&x, 2, 10, 1).unwrap();
        let truth: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
        assert!(same_partition(&res.hard_labels, &truth));
        assert!(res.warnings.is_empty());
    }

    #[test]
    fn single_cluster() {
        let (x, _) = crate::corpus::generate_synthetic(20, 3, 1.0, 2).unwrap();
        let res = spectral_cluster(&x, 1, 4, 0).unwrap();
        assert!(res.hard_labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn deterministic() {
        let (x, _) = crate::corpus::generate_synthetic(40, 4, 2.0, 3).unwrap();
        assert_eq!(spectral_cluster(&x, 2, 5, 4).unwrap(), spectral_cluster(&x, 2, 5, 4).unwrap());
    }

    #[test]
    fn disconnected_graph_warns() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i / 4) as f64 * 100.0 + (i % 4) as f64 * 0.1, 0.0])
            .collect();
        let x = EmbeddingMatrix::from_rows(&rows).unwrap();
        let res = spectral_cluster(&x, 2, 3, 0).unwrap();
        assert_eq!(res.warnings.len(), 1);
    }

    #[test]
    fn neighbor_bounds() {
        let x = EmbeddingMatrix::zeros(5, 2);
        assert!(spectral_cluster(&x, 2, 5, 0).is_err());
        assert!(spectral_cluster(&x, 2, 1, 0).is_err());
    }
}
