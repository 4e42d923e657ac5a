//! Kernel principal component analysis with a Gaussian kernel.
//!
//! A random pixel sample fixes the kernel matrix; the centered matrix is
//! eigendecomposed with a cyclic Jacobi solver and the leading components
//! covering the requested cumulative variance are kept. Out-of-sample pixels
//! project through the centered kernel rows, scaled so the training
//! projections have unit variance per component.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, dist_sq, Matrix};
use crate::raster::RasterGrid;

#[derive(Debug, Error, PartialEq)]
pub enum KpcaError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("samples are identical: kernel scale would be zero")]
    DegenerateSamples,
    #[error("kernel scale must be positive, got {0}")]
    BadGamma(f64),
    #[error("kernel matrix has non-finite entries")]
    NonFiniteKernel,
    #[error("variance target must lie in (0, 1], got {0}")]
    BadVarianceTarget(f64),
    #[error("pixel dimension {0} does not match model dimension {1}")]
    DimensionMismatch(usize, usize),
    #[error("raster has no valid pixels to sample")]
    NoValidPixels,
    #[error("eigendecomposition failed: {0}")]
    Eigen(#[from] linalg::LinalgError),
}

/// Fitted kernel PCA model holding everything needed for projection.
#[derive(Debug, Clone)]
pub struct KernelModel {
    sample_vectors: Matrix,
    /// Gaussian kernel scale: `k(x, y) = exp(-||x - y||^2 / (2 gamma^2))`.
    pub gamma: f64,
    /// Eigenvalues of the centered kernel matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
    /// Number of leading components covering the variance target.
    pub kept: usize,
    row_means: Vec<f64>,
    total_mean: f64,
}

/// Mean Euclidean distance over all unordered sample pairs; the kernel
/// scale estimate.
pub fn estimate_gamma(samples: &Matrix) -> Result<f64, KpcaError> {
    let m = samples.rows();
    if m < 2 {
        return Err(KpcaError::TooFewSamples(m));
    }
    let mut sum = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            sum += dist_sq(samples.row(i), samples.row(j)).sqrt();
        }
    }
    let gamma = sum / (m * (m - 1) / 2) as f64;
    if gamma == 0.0 {
        return Err(KpcaError::DegenerateSamples);
    }
    Ok(gamma)
}

/// Fit the model: Gaussian kernel matrix, double centering, symmetric
/// eigendecomposition, and component selection at `variance_target`
/// cumulative share (negative round-off eigenvalues clamp to zero for the
/// accounting).
pub fn fit_kpca(
    samples: Matrix,
    gamma: f64,
    variance_target: f64,
) -> Result<KernelModel, KpcaError> {
    let m = samples.rows();
    if m < 2 {
        return Err(KpcaError::TooFewSamples(m));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(KpcaError::BadGamma(gamma));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(KpcaError::BadVarianceTarget(variance_target));
    }
    let denom = 2.0 * gamma * gamma;
    let mut kernel = Matrix::zeros(m, m);
    for i in 0..m {
        kernel.set(i, i, 1.0);
        for j in i + 1..m {
            let k = (-dist_sq(samples.row(i), samples.row(j)) / denom).exp();
            kernel.set(i, j, k);
            kernel.set(j, i, k);
        }
    }
    if !kernel.is_finite() {
        return Err(KpcaError::NonFiniteKernel);
    }
    let row_means: Vec<f64> =
        (0..m).map(|i| kernel.row(i).iter().sum::<f64>() / m as f64).collect();
    let total_mean = row_means.iter().sum::<f64>() / m as f64;
    let centered = Matrix::from_fn(m, m, |i, j| {
        kernel.get(i, j) - row_means[i] - row_means[j] + total_mean
    });
    let eig = linalg::jacobi_eigh(&centered, 1e-10, 100)?;
    // Centering round-off may produce slightly negative eigenvalues; anything
    // materially negative indicates a broken kernel.
    let max_eig = eig.values.first().copied().unwrap_or(0.0);
    if eig.values.iter().any(|&l| l < -1e-8 * max_eig.max(1e-300)) {
        return Err(KpcaError::NonFiniteKernel);
    }
    let clamped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 {
        return Err(KpcaError::DegenerateSamples);
    }
    let mut kept = clamped.len();
    let mut cum = 0.0;
    for (i, &l) in clamped.iter().enumerate() {
        cum += l;
        if cum >= variance_target * total {
            kept = i + 1;
            break;
        }
    }
    Ok(KernelModel {
        sample_vectors: samples,
        gamma,
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        kept,
        row_means,
        total_mean,
    })
}

impl KernelModel {
    pub fn sample_count(&self) -> usize {
        self.sample_vectors.rows()
    }

    pub fn dimension(&self) -> usize {
        self.sample_vectors.cols()
    }

    /// Cumulative variance share of the first `q` components.
    pub fn cumulative_share(&self, q: usize) -> f64 {
        let clamped: Vec<f64> = self.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        clamped.iter().take(q).sum::<f64>() / total
    }

    /// Project rows of `pixels` onto the kept components.
    ///
    /// Component `q` is scaled by `sqrt(m) / lambda_q`, which gives the
    /// training samples zero mean and unit (population) variance along each
    /// component.
    pub fn project(&self, pixels: &Matrix) -> Result<Matrix, KpcaError> {
        let m = self.sample_count();
        if pixels.cols() != self.dimension() {
            return Err(KpcaError::DimensionMismatch(pixels.cols(), self.dimension()));
        }
        let denom = 2.0 * self.gamma * self.gamma;
        let scale: Vec<f64> =
            (0..self.kept).map(|q| (m as f64).sqrt() / self.eigenvalues[q]).collect();
        let mut out = Matrix::zeros(pixels.rows(), self.kept);
        let mut krow = vec![0.0f64; m];
        for r in 0..pixels.rows() {
            let x = pixels.row(r);
            let mut mean_k = 0.0;
            for (j, slot) in krow.iter_mut().enumerate() {
                let k = (-dist_sq(x, self.sample_vectors.row(j)) / denom).exp();
                *slot = k;
                mean_k += k;
            }
            mean_k /= m as f64;
            for q in 0..self.kept {
                let mut acc = 0.0;
                for (j, &k) in krow.iter().enumerate() {
                    let centered = k - mean_k - self.row_means[j] + self.total_mean;
                    acc += self.eigenvectors.get(j, q) * centered;
                }
                out.set(r, q, acc * scale[q]);
            }
        }
        if !out.is_finite() {
            return Err(KpcaError::NonFiniteKernel);
        }
        Ok(out)
    }

    /// Project a whole grid, band-vector per pixel, into a `kept`-band
    /// feature raster. Pixels with nodata in any input band stay nodata in
    /// every output band.
    pub fn project_grid(&self, grid: &RasterGrid) -> Result<RasterGrid, KpcaError> {
        if grid.bands() != self.dimension() {
            return Err(KpcaError::DimensionMismatch(grid.bands(), self.dimension()));
        }
        let pixels = grid.pixels();
        let mut valid: Vec<usize> = Vec::with_capacity(pixels);
        for p in 0..pixels {
            if grid.pixel_valid(p) {
                valid.push(p);
            }
        }
        let mut mat = Matrix::zeros(valid.len(), grid.bands());
        for (row, &p) in valid.iter().enumerate() {
            grid.pixel_vector(p, mat.row_mut(row));
        }
        let projected = self.project(&mat)?;
        let mut out = RasterGrid::filled(grid.rows(), grid.cols(), self.kept, grid.nodata, grid.nodata)
            .with_geo(grid.origin_x, grid.origin_y, grid.pixel_size);
        for (row, &p) in valid.iter().enumerate() {
            for q in 0..self.kept {
                out.band_mut(q)[p] = projected.get(row, q) as f32;
            }
        }
        Ok(out)
    }
}

/// Uniform sample (without replacement) of valid pixels as row vectors.
/// Returns the sample matrix and the flat pixel indices drawn.
pub fn sample_pixels(
    grid: &RasterGrid,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, Vec<usize>), KpcaError> {
    let mut valid: Vec<usize> = (0..grid.pixels()).filter(|&p| grid.pixel_valid(p)).collect();
    if valid.is_empty() {
        return Err(KpcaError::NoValidPixels);
    }
    let take = m.min(valid.len());
    // Partial Fisher-Yates: the first `take` entries become the sample.
    for i in 0..take {
        let j = rng.random_range(i..valid.len());
        valid.swap(i, j);
    }
    let chosen = valid[..take].to_vec();
    let mut mat = Matrix::zeros(take, grid.bands());
    for (row, &p) in chosen.iter().enumerate() {
        grid.pixel_vector(p, mat.row_mut(row));
    }
    Ok((mat, chosen))
}
