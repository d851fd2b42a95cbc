//! Gaussian kernel PCA used as a kernel projection machine: fit on training
//! points, project every split onto the leading `D` axes, then run a linear
//! learner in the projected space.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::model::Features;
use crate::rng::Rng;

/// Eigenvalues at or below this are discarded.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

fn dense_rows(x: &Features) -> (usize, Vec<f64>) {
    match x.to_dense() {
        Features::Dense { dim, data } => (dim, data),
        Features::Sparse { .. } => unreachable!(),
    }
}

/// `K[i][j] = exp(-‖x_i - x'_j‖² / (2σ²))`
pub fn gaussian_gram(x: &Features, x2: &Features, sigma: f64) -> Result<DMatrix<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("kernel bandwidth must be positive, got {sigma}")));
    }
    if x.dim() != x2.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: x2.dim() });
    }
    let (d, a) = dense_rows(x);
    let (_, b) = dense_rows(x2);
    let (na, nb) = (x.len(), x2.len());
    let scale = -1.0 / (2.0 * sigma * sigma);
    let mut k = DMatrix::zeros(na, nb);
    for i in 0..na {
        let xi = &a[i * d..(i + 1) * d];
        for j in 0..nb {
            let xj = &b[j * d..(j + 1) * d];
            let dist: f64 = xi.iter().zip(xj).map(|(u, v)| (u - v) * (u - v)).sum();
            k[(i, j)] = (dist * scale).exp();
        }
    }
    Ok(k)
}

/// Median pairwise Euclidean distance over at most `max_points` rows.
pub fn median_bandwidth(x: &Features, max_points: usize, rng: &mut Rng) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput("bandwidth heuristic needs at least two points".into()));
    }
    let idx: Vec<usize> = if n > max_points { sample(rng, n, max_points).into_vec() } else { (0..n).collect() };
    let sub = x.select(&idx);
    let (d, data) = dense_rows(&sub);
    let m = idx.len();
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let s: f64 = (0..d).map(|k| (data[i * d + k] - data[j * d + k]).powi(2)).sum();
            dists.push(s.sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let med = if dists.len() % 2 == 0 { 0.5 * (dists[mid - 1] + dists[mid]) } else { dists[mid] };
    if med > 0.0 {
        Ok(med)
    } else {
        Err(Error::InvalidInput("median pairwise distance is zero".into()))
    }
}

#[derive(Debug, Clone)]
pub struct KpcaProjector {
    train_points: Features,
    sigma: f64,
    /// `m x D`, eigenvectors scaled by `1/√λ`.
    alphas: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    kernel_row_means: Vec<f64>,
    kernel_grand_mean: f64,
    centered_trace: f64,
    train_projection: DMatrix<f64>,
}

impl KpcaProjector {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Output dimension `D` actually kept.
    pub fn output_dim(&self) -> usize {
        self.alphas.ncols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alphas(&self) -> &DMatrix<f64> {
        &self.alphas
    }

    /// Trace of the double-centered training Gram matrix.
    pub fn centered_trace(&self) -> f64 {
        self.centered_trace
    }

    /// Projections of the training points computed at fit time (`m x D`).
    pub fn train_projection(&self) -> &DMatrix<f64> {
        &self.train_projection
    }

    pub fn transform(&self, x: &Features) -> Result<DMatrix<f64>> {
        kpca_transform(self, x)
    }

    /// Projects `x` and returns the result as dense features.
    pub fn transform_features(&self, x: &Features) -> Result<Features> {
        Ok(matrix_to_features(&self.transform(x)?))
    }
}

pub fn matrix_to_features(m: &DMatrix<f64>) -> Features {
    let data: Vec<f64> = m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
    Features::Dense { dim: m.ncols(), data }
}

/// Double-centers the Gram matrix of `x` and keeps the top `dims` eigenpairs
/// above [`EIGEN_TOLERANCE`].
pub fn kpca_fit(x: &Features, sigma: f64, dims: usize) -> Result<KpcaProjector> {
    let m = x.len();
    if dims > m {
        return Err(Error::InvalidInput(format!("{dims} components requested from {m} points")));
    }
    if m == 0 || dims == 0 {
        return Err(Error::InvalidInput("kernel PCA needs at least one point and one component".into()));
    }
    let k = gaussian_gram(x, x, sigma)?;
    let row_means: Vec<f64> = (0..m).map(|i| k.row(i).sum() / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    let kc = DMatrix::from_fn(m, m, |i, j| k[(i, j)] - row_means[i] - row_means[j] + grand);
    let centered_trace = kc.trace();

    let eig = SymmetricEigen::new(kc.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept: Vec<usize> = order.into_iter().take(dims).filter(|&i| eig.eigenvalues[i] > EIGEN_TOLERANCE).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateKernel { tolerance: EIGEN_TOLERANCE });
    }
    let eigenvalues: Vec<f64> = kept.iter().map(|&i| eig.eigenvalues[i]).collect();
    let alphas = DMatrix::from_fn(m, kept.len(), |r, c| eig.eigenvectors[(r, kept[c])] / eigenvalues[c].sqrt());
    let train_projection = &kc * &alphas;
    Ok(KpcaProjector {
        train_points: x.to_dense(),
        sigma,
        alphas,
        eigenvalues,
        kernel_row_means: row_means,
        kernel_grand_mean: grand,
        centered_trace,
        train_projection,
    })
}

/// Centered cross-Gram against the training points, times the scaled eigenvectors.
pub fn kpca_transform(proj: &KpcaProjector, x: &Features) -> Result<DMatrix<f64>> {
    if x.dim() != proj.train_points.dim() {
        return Err(Error::DimensionMismatch { expected: proj.train_points.dim(), got: x.dim() });
    }
    if x.is_empty() {
        return Ok(DMatrix::zeros(0, proj.output_dim()));
    }
    let mut k = gaussian_gram(x, &proj.train_points, proj.sigma)?;
    let m = proj.train_points.len();
    for mut row in k.row_iter_mut() {
        let mean = row.sum() / m as f64;
        for (j, v) in row.iter_mut().enumerate() {
            *v += proj.kernel_grand_mean - mean - proj.kernel_row_means[j];
        }
    }
    Ok(k * &proj.alphas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn feats(rows: &[Vec<f64>]) -> Features {
        Features::from_rows(rows[0].len(), rows).unwrap()
    }

    #[test]
    fn gram_examples() {
        let x = feats(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.3, -2.0]]);
        let k = gaussian_gram(&x, &x, 0.7).unwrap();
        for i in 0..3 {
            assert_eq!(k[(i, i)], 1.0);
        }
        let sigma = 0.5;
        let x = feats(&[vec![0.0], vec![sigma * 2f64.sqrt()]]);
        let k = gaussian_gram(&x, &x, sigma).unwrap();
        assert_abs_diff_eq!(k[(0, 1)], (-1.0f64).exp(), epsilon = 1e-12);
        assert!(gaussian_gram(&x, &x, 0.0).is_err());
    }

    #[test]
    fn two_points_project_symmetrically() {
        let x = feats(&[vec![0.0, 0.0], vec![1.0, 0.0]]);
        let sigma = 1.0;
        let p = kpca_fit(&x, sigma, 1).unwrap();
        assert_eq!(p.output_dim(), 1);
        // Centered Gram is [[a, -a], [-a, a]] with a = (1 - k) / 2.
        let kval = (-0.5f64).exp();
        let expected = ((1.0 - kval) / 2.0).sqrt();
        let t = p.train_projection();
        assert_abs_diff_eq!(t[(0, 0)].abs(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(t[(0, 0)] + t[(1, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let x = feats(&vec![vec![1.0, 2.0]; 4]);
        assert!(matches!(kpca_fit(&x, 1.0, 2), Err(Error::DegenerateKernel { .. })));
    }

    #[test]
    fn too_many_components_rejected() {
        let x = feats(&[vec![1.0], vec![2.0]]);
        assert!(kpca_fit(&x, 1.0, 3).is_err());
    }

    #[test]
    fn transform_reproduces_fit_and_is_centered() {
        let mut r = rng::seeded(3);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rand::Rng::random::<f64>(&mut r)).collect()).collect();
        let x = feats(&rows);
        let p = kpca_fit(&x, 0.8, 6).unwrap();
        let t = p.transform(&x).unwrap();
        assert!((&t - p.train_projection()).amax() < 1e-8);
        for c in t.column_iter() {
            assert!(c.mean().abs() < 1e-8);
        }
        let empty = Features::dense(3, vec![]).unwrap();
        assert_eq!(p.transform(&empty).unwrap().nrows(), 0);
        assert!(p.transform(&feats(&[vec![1.0]])).is_err());
    }

    #[test]
    fn median_bandwidth_small() {
        let x = feats(&[vec![0.0], vec![1.0], vec![3.0]]);
        // Distances 1, 2, 3.
        assert_eq!(median_bandwidth(&x, 1000, &mut rng::seeded(0)).unwrap(), 2.0);
    }
}
