//! Gaussian model of the V-space latent distribution.
//!
//! The model stores the empirical mean and (unbiased) covariance of V-space
//! samples together with the quantities every consumer needs: the
//! eigendecomposition used for PCA, a Cholesky factor of the regularized
//! covariance used for Mahalanobis energies and sampling, and W-space
//! statistics of the same samples used by truncation and by the inversion
//! noise schedule.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::rng::{rng_for, stream};
use crate::scalar::{all_finite, dot, Scalar};

/// Relative covariance regularization: `ε = REG_SCALE · trace(Σ) / d`.
pub const REG_SCALE: f64 = 1e-6;
/// Lower bound on `ε` so a zero-variance fit still has an invertible factor.
pub const REG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel<T> {
    dim: usize,
    sample_count: usize,
    mean_v: Vec<T>,
    cov_v: Matrix<T>,
    eigvecs: Matrix<T>,
    eigvals: Vec<T>,
    chol: Matrix<T>,
    epsilon: T,
    mean_w: Vec<T>,
    std_w: Vec<T>,
}

impl<T: Scalar> GaussianModel<T> {
    /// Fits the model to paired samples. Row `i` of `samples_v` must be the
    /// V-space image of row `i` of `samples_w`.
    pub fn fit(samples_v: &Matrix<T>, samples_w: &Matrix<T>) -> Result<Self> {
        let n = samples_v.rows();
        let d = samples_v.cols();
        check_dim(n, samples_w.rows())?;
        check_dim(d, samples_w.cols())?;
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "fitting needs at least 2 samples, got {n}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional samples".into()));
        }
        if !all_finite(samples_v.as_slice()) || !all_finite(samples_w.as_slice()) {
            return Err(Error::NonFinite("fit samples".into()));
        }
        let (mean_v, cov_v) = mean_and_covariance(samples_v);
        let (mean_w, cov_w) = column_mean_and_variance(samples_w);
        let std_w = cov_w.into_iter().map(|v: T| v.sqrt()).collect();
        Self::from_parts(mean_v, cov_v, mean_w, std_w, n)
    }

    /// Builds a model from known moments. W-space statistics default to
    /// the V-space ones when absent.
    pub fn from_moments(
        mean_v: Vec<T>,
        cov_v: Matrix<T>,
        mean_w: Option<Vec<T>>,
        sample_count: usize,
    ) -> Result<Self> {
        let std_w = cov_v.diag().into_iter().map(|v| v.max(T::zero()).sqrt()).collect();
        let mean_w = mean_w.unwrap_or_else(|| mean_v.clone());
        Self::from_parts(mean_v, cov_v, mean_w, std_w, sample_count)
    }

    fn from_parts(
        mean_v: Vec<T>,
        cov_v: Matrix<T>,
        mean_w: Vec<T>,
        std_w: Vec<T>,
        sample_count: usize,
    ) -> Result<Self> {
        let d = mean_v.len();
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional model".into()));
        }
        check_dim(d, cov_v.rows())?;
        check_dim(d, cov_v.cols())?;
        check_dim(d, mean_w.len())?;
        check_dim(d, std_w.len())?;
        let eig = cov_v.symmetric_eigen()?;
        let eigvals = eig.values.into_iter().map(|v| v.max(T::zero())).collect();
        let epsilon = regularization(&cov_v);
        let chol = regularized(&cov_v, epsilon).cholesky()?;
        Ok(Self {
            dim: d,
            sample_count,
            mean_v,
            cov_v,
            eigvecs: eig.vectors,
            eigvals,
            chol,
            epsilon,
            mean_w,
            std_w,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn mean_v(&self) -> &[T] {
        &self.mean_v
    }

    pub fn cov_v(&self) -> &Matrix<T> {
        &self.cov_v
    }

    /// Columns are principal directions, ordered by descending variance.
    pub fn eigvecs(&self) -> &Matrix<T> {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &[T] {
        &self.eigvals
    }

    /// Lower Cholesky factor of `Σ + εI`.
    pub fn chol(&self) -> &Matrix<T> {
        &self.chol
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Empirical W-space mean `w̄`.
    pub fn mean_w(&self) -> &[T] {
        &self.mean_w
    }

    /// Per-coordinate W-space standard deviation of the fitting samples.
    pub fn std_w(&self) -> &[T] {
        &self.std_w
    }

    /// Largest per-component standard deviation `max_i √λ_i`.
    pub fn sigma_max(&self) -> T {
        self.eigvals[0].sqrt()
    }

    /// `(v − μ)ᵀ (Σ + εI)⁻¹ (v − μ)` through two triangular solves.
    pub fn mahalanobis_sq(&self, v: &[T]) -> Result<T> {
        let y = self.whiten(v)?;
        Ok(dot(&y, &y).max(T::zero()))
    }

    /// Gradient `2 (Σ + εI)⁻¹ (v − μ)` of [`Self::mahalanobis_sq`].
    pub fn mahalanobis_sq_grad(&self, v: &[T]) -> Result<Vec<T>> {
        let y = self.whiten(v)?;
        let mut g = self.chol.solve_lower_transpose(&y)?;
        for gi in &mut g {
            *gi = *gi * T::lit(2.0);
        }
        Ok(g)
    }

    /// Energy and gradient together, sharing the forward solve.
    pub fn mahalanobis_sq_with_grad(&self, v: &[T]) -> Result<(T, Vec<T>)> {
        let y = self.whiten(v)?;
        let e = dot(&y, &y).max(T::zero());
        let mut g = self.chol.solve_lower_transpose(&y)?;
        for gi in &mut g {
            *gi = *gi * T::lit(2.0);
        }
        Ok((e, g))
    }

    /// `L⁻¹ (v − μ)`
    fn whiten(&self, v: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, v.len())?;
        let diff: Vec<T> = v.iter().zip(&self.mean_v).map(|(&a, &b)| a - b).collect();
        self.chol.solve_lower(&diff)
    }

    /// `n` rows of `μ + L ξ`, `ξ` standard normal. Row `i` depends only on `(seed, i)`.
    pub fn sample(&self, seed: u64, n: usize) -> Matrix<T> {
        let d = self.dim;
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(seed, stream::GAUSSIAN_SAMPLES, i as u64);
                let xi: Vec<T> = (0..d)
                    .map(|_| T::lit(StandardNormal.sample(&mut rng)))
                    .collect();
                let mut row = self.chol.matvec(&xi).expect("factor is d×d");
                for (r, &m) in row.iter_mut().zip(&self.mean_v) {
                    *r = *r + m;
                }
                row
            })
            .collect();
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            data.extend(r);
        }
        Matrix::from_vec(n, d, data).expect("n×d samples")
    }

    pub fn to_file(&self) -> ModelFile<T> {
        ModelFile {
            dim: self.dim,
            sample_count: self.sample_count,
            mean_v: self.mean_v.clone(),
            mean_w: self.mean_w.clone(),
            std_w: self.std_w.clone(),
            cov_v: self.cov_v.as_slice().to_vec(),
            eigvals: self.eigvals.clone(),
            eigvecs: self.eigvecs.as_slice().to_vec(),
            epsilon: self.epsilon,
        }
    }

    /// Rebuilds from the serialized form. Stored eigenpairs are kept as-is;
    /// the Cholesky factor is recomputed from `cov_v` and `epsilon`.
    pub fn from_file(file: ModelFile<T>) -> Result<Self> {
        let d = file.dim;
        if d == 0 {
            return Err(Error::Format("model dim must be positive".into()));
        }
        let fmt = |what: &str, e: Error| Error::Format(format!("{what}: {e}"));
        let cov_v = Matrix::from_vec(d, d, file.cov_v).map_err(|e| fmt("cov_v", e))?;
        let eigvecs = Matrix::from_vec(d, d, file.eigvecs).map_err(|e| fmt("eigvecs", e))?;
        for (name, v) in [
            ("mean_v", &file.mean_v),
            ("mean_w", &file.mean_w),
            ("std_w", &file.std_w),
            ("eigvals", &file.eigvals),
        ] {
            check_dim(d, v.len()).map_err(|e| fmt(name, e))?;
        }
        let all = [
            cov_v.as_slice(),
            eigvecs.as_slice(),
            &file.mean_v,
            &file.mean_w,
            &file.std_w,
            &file.eigvals,
        ];
        if all.iter().any(|s| !all_finite(s)) || !file.epsilon.is_finite() {
            return Err(Error::Format("non-finite entry in model file".into()));
        }
        let chol = regularized(&cov_v, file.epsilon)
            .cholesky()
            .map_err(|e| fmt("cov_v", e))?;
        Ok(Self {
            dim: d,
            sample_count: file.sample_count,
            mean_v: file.mean_v,
            cov_v,
            eigvecs,
            eigvals: file.eigvals,
            chol,
            epsilon: file.epsilon,
            mean_w: file.mean_w,
            std_w: file.std_w,
        })
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.to_file())?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: ModelFile<T> =
            serde_json::from_reader(reader).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_file(file)
    }
}

/// On-disk model layout; matrices are flattened row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile<T> {
    pub dim: usize,
    pub sample_count: usize,
    pub mean_v: Vec<T>,
    pub mean_w: Vec<T>,
    pub std_w: Vec<T>,
    pub cov_v: Vec<T>,
    pub eigvals: Vec<T>,
    pub eigvecs: Vec<T>,
    pub epsilon: T,
}

fn regularization<T: Scalar>(cov: &Matrix<T>) -> T {
    let d = T::from_usize(cov.rows()).expect("dim fits scalar");
    (T::lit(REG_SCALE) * cov.trace() / d).max(T::lit(REG_FLOOR))
}

fn regularized<T: Scalar>(cov: &Matrix<T>, epsilon: T) -> Matrix<T> {
    let mut m = cov.clone();
    for i in 0..m.rows() {
        m[(i, i)] = m[(i, i)] + epsilon;
    }
    m
}

/// Column means and unbiased covariance of the rows of `x`.
pub fn mean_and_covariance<T: Scalar>(x: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = x.rows();
    let d = x.cols();
    let mean = column_means(x);
    let mut cov = Matrix::zeros(d, d);
    let mut centered = vec![T::zero(); d];
    for row in x.row_iter() {
        for ((c, &r), &m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = r - m;
        }
        for i in 0..d {
            let ci = centered[i];
            let dst = &mut cov.row_mut(i)[i..];
            for (o, &cj) in dst.iter_mut().zip(&centered[i..]) {
                *o = *o + ci * cj;
            }
        }
    }
    let denom = T::from_usize(n - 1).expect("count fits scalar");
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

pub fn column_means<T: Scalar>(x: &Matrix<T>) -> Vec<T> {
    let mut mean = vec![T::zero(); x.cols()];
    for row in x.row_iter() {
        for (m, &r) in mean.iter_mut().zip(row) {
            *m = *m + r;
        }
    }
    let n = T::from_usize(x.rows().max(1)).expect("count fits scalar");
    mean.iter_mut().for_each(|m| *m = *m / n);
    mean
}

fn column_mean_and_variance<T: Scalar>(x: &Matrix<T>) -> (Vec<T>, Vec<T>) {
    let mean = column_means(x);
    let mut var = vec![T::zero(); x.cols()];
    for row in x.row_iter() {
        for ((v, &r), &m) in var.iter_mut().zip(row).zip(&mean) {
            *v = *v + (r - m) * (r - m);
        }
    }
    let denom = T::from_usize(x.rows().saturating_sub(1).max(1)).expect("count fits scalar");
    var.iter_mut().for_each(|v| *v = *v / denom);
    (mean, var)
}

/// Squared Fréchet (2-Wasserstein) distance between two Gaussians:
/// `‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2 (Σ₁^{½} Σ₂ Σ₁^{½})^{½})`.
pub fn frechet_distance<T: Scalar>(a: &GaussianModel<T>, b: &GaussianModel<T>) -> Result<T> {
    frechet_from_moments(a.mean_v(), a.cov_v(), b.mean_v(), b.cov_v())
}

pub fn frechet_from_moments<T: Scalar>(
    mean_a: &[T],
    cov_a: &Matrix<T>,
    mean_b: &[T],
    cov_b: &Matrix<T>,
) -> Result<T> {
    let d = mean_a.len();
    check_dim(d, mean_b.len())?;
    check_dim(d, cov_a.rows())?;
    check_dim(d, cov_b.rows())?;
    let mean_term: T = mean_a
        .iter()
        .zip(mean_b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    let sqrt_a = cov_a.symmetric_eigen()?.map_values(|v| v.max(T::zero()).sqrt());
    let inner = sqrt_a.matmul(cov_b)?.matmul(&sqrt_a)?;
    let cross: T = inner
        .symmetric_eigen()?
        .values
        .into_iter()
        .map(|v| v.max(T::zero()).sqrt())
        .sum();
    let value = mean_term + cov_a.trace() + cov_b.trace() - T::lit(2.0) * cross;
    Ok(value.max(T::zero()))
}
