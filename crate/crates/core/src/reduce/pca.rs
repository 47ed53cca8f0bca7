use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{EmbeddingMatrix, Error, Result};

/// Principal axes of a centered data matrix.
///
/// `components` is `d x cols`, row-major, with orthonormal rows ordered by
/// decreasing explained variance. Each row's largest-magnitude entry is
/// positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn fit(x: &EmbeddingMatrix, d: usize) -> Result<Self> {
        let (n, cols) = x.shape();
        if n < 2 {
            return Err(Error::invalid("PCA needs at least 2 rows"));
        }
        if d == 0 || d > (n - 1).min(cols) {
            return Err(Error::invalid(format!(
                "cannot keep {d} components from a {n}x{cols} matrix (max {})",
                (n - 1).min(cols)
            )));
        }
        let mut mean = vec![0.0; cols];
        for row in x.row_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut cov = DMatrix::<f64>::zeros(cols, cols);
        let mut centered = vec![0.0; cols];
        for row in x.row_iter() {
            for j in 0..cols {
                centered[j] = row[j] - mean[j];
            }
            for a in 0..cols {
                let ca = centered[a];
                if ca == 0.0 {
                    continue;
                }
                for b in a..cols {
                    cov[(a, b)] += ca * centered[b];
                }
            }
        }
        for a in 0..cols {
            for b in a..cols {
                let v = cov[(a, b)] / (n - 1) as f64;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }

        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .partial_cmp(&eig.eigenvalues[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });

        let mut components = Vec::with_capacity(d);
        let mut explained_variance = Vec::with_capacity(d);
        for &k in order.iter().take(d) {
            let mut axis: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let pivot = axis
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1.abs() { (i, *v) } else { best })
                .0;
            if axis[pivot] < 0.0 {
                axis.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(axis);
            explained_variance.push(eig.eigenvalues[k].max(0.0));
        }
        Ok(Self { mean, components, explained_variance })
    }

    pub fn dims(&self) -> usize {
        self.components.len()
    }

    pub fn transform(&self, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::shape(format!(
                "PCA fitted on {} columns, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let d = self.dims();
        let mut out = Vec::with_capacity(x.rows() * d);
        for row in x.row_iter() {
            for axis in &self.components {
                out.push(
                    row.iter()
                        .zip(&self.mean)
                        .zip(axis)
                        .map(|((v, m), a)| (v - m) * a)
                        .sum(),
                );
            }
        }
        EmbeddingMatrix::new(x.rows(), d, out)
    }

    /// Map projections back to the input space: `mean + z · components`.
    pub fn inverse_transform(&self, z: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        if z.cols() != self.dims() {
            return Err(Error::shape("projection width does not match component count"));
        }
        let cols = self.mean.len();
        let mut out = Vec::with_capacity(z.rows() * cols);
        for row in z.row_iter() {
            let mut rec = self.mean.clone();
            for (coef, axis) in row.iter().zip(&self.components) {
                for (r, a) in rec.iter_mut().zip(axis) {
                    *r += coef * a;
                }
            }
            out.extend(rec);
        }
        EmbeddingMatrix::new(z.rows(), cols, out)
    }
}

pub fn pca_fit_transform(x: &EmbeddingMatrix, d: usize) -> Result<(PcaModel, EmbeddingMatrix)> {
    let model = PcaModel::fit(x, d)?;
    let z = model.transform(x)?;
    Ok((model, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = crate::util::rng(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        EmbeddingMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn lossless_when_keeping_all_dims() {
        let x = random_matrix(12, 4, 1);
        let (model, z) = pca_fit_transform(&x, 4).unwrap();
        let back = model.inverse_transform(&z).unwrap();
        for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn points_on_the_diagonal() {
        let x = EmbeddingMatrix::from_rows(&[
            vec![-2.0, -2.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![3.0, 3.0],
        ])
        .unwrap();
        let (model, _) = pca_fit_transform(&x, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components[0][0] - h).abs() < 1e-12);
        assert!((model.components[0][1] - h).abs() < 1e-12);
        assert!(model.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn components_orthonormal_and_sorted() {
        let x = random_matrix(30, 7, 4);
        let (model, z) = pca_fit_transform(&x, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = model.components[i].iter().zip(&model.components[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
        assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));

        // projections are uncorrelated, with the explained variances on the diagonal
        for a in 0..5 {
            for b in 0..5 {
                let cov: f64 = z.row_iter().map(|r| r[a] * r[b]).sum::<f64>() / 29.0;
                let expect = if a == b { model.explained_variance[a] } else { 0.0 };
                assert!((cov - expect).abs() < 1e-8, "{a},{b}: {cov}");
            }
        }

        let total: f64 = (0..7)
            .map(|j| {
                let m = x.row_iter().map(|r| r[j]).sum::<f64>() / 30.0;
                x.row_iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / 29.0
            })
            .sum();
        assert!(model.explained_variance.iter().sum::<f64>() <= total + 1e-12);
    }

    #[test]
    fn dimension_checks() {
        let x = random_matrix(3, 5, 0);
        assert!(PcaModel::fit(&x, 3).is_err());
        assert!(PcaModel::fit(&x, 0).is_err());
        assert!(PcaModel::fit(&random_matrix(1, 5, 0), 1).is_err());
        let model = PcaModel::fit(&x, 2).unwrap();
        assert!(model.transform(&random_matrix(2, 4, 0)).is_err());
    }
}
