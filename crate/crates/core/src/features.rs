//! Fixed random-feature embedding of images.
//!
//! A two-layer network, `f(x) = B · LRU₀.₂(A x + a) + b`, with seeded
//! weights. It serves as the perceptual reconstruction loss, as the feature
//! space for Fréchet distances, and as the identity embedding.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::latent::{lru_derivative, lru_scalar};
use crate::linalg::Matrix;
use crate::rng::{rng_for, stream};
use crate::scalar::{dot, Scalar};

const SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureNetSpec {
    pub seed: u64,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNet<T> {
    spec: FeatureNetSpec,
    hidden: Matrix<T>,
    hidden_bias: Vec<T>,
    output: Matrix<T>,
    output_bias: Vec<T>,
}

impl<T: Scalar> FeatureNet<T> {
    pub const DEFAULT_HIDDEN: usize = 128;
    pub const DEFAULT_OUTPUT: usize = 64;

    pub fn new(spec: FeatureNetSpec) -> Self {
        let mut rng = rng_for(spec.seed, stream::FEATURE_NET, 0);
        let mut draw = |rows: usize, cols: usize, std: f64| {
            let data = (0..rows * cols)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    T::lit(x * std)
                })
                .collect();
            Matrix::from_vec(rows, cols, data).expect("rows×cols")
        };
        let hidden = draw(spec.hidden_dim, spec.input_dim, (2.0 / spec.input_dim as f64).sqrt());
        let hidden_bias = draw(1, spec.hidden_dim, 0.1).into_vec();
        let output = draw(spec.output_dim, spec.hidden_dim, (1.0 / spec.hidden_dim as f64).sqrt());
        Self {
            spec,
            hidden,
            hidden_bias,
            output,
            output_bias: vec![T::zero(); spec.output_dim],
        }
    }

    /// Network with the default widths for images of `input_dim` values.
    pub fn with_defaults(seed: u64, input_dim: usize) -> Self {
        Self::new(FeatureNetSpec {
            seed,
            input_dim,
            hidden_dim: Self::DEFAULT_HIDDEN,
            output_dim: Self::DEFAULT_OUTPUT,
        })
    }

    pub fn spec(&self) -> FeatureNetSpec {
        self.spec
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    fn hidden_pre(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.spec.input_dim, x.len())?;
        Ok(self
            .hidden
            .row_iter()
            .zip(&self.hidden_bias)
            .map(|(r, &b)| dot(r, x) + b)
            .collect())
    }

    pub fn embed(&self, x: &[T]) -> Result<Vec<T>> {
        let slope = T::lit(SLOPE);
        let h: Vec<T> = self.hidden_pre(x)?.into_iter().map(|v| lru_scalar(v, slope)).collect();
        Ok(self
            .output
            .row_iter()
            .zip(&self.output_bias)
            .map(|(r, &b)| dot(r, &h) + b)
            .collect())
    }

    /// Embedding together with the gradient of `⟨cotangent, f(x)⟩` with respect to `x`,
    /// where the cotangent is computed from the embedding by `cot`.
    pub fn embed_with_vjp(
        &self,
        x: &[T],
        cot: impl FnOnce(&[T]) -> Vec<T>,
    ) -> Result<(Vec<T>, Vec<T>)> {
        let slope = T::lit(SLOPE);
        let pre = self.hidden_pre(x)?;
        let h: Vec<T> = pre.iter().map(|&v| lru_scalar(v, slope)).collect();
        let f: Vec<T> = self
            .output
            .row_iter()
            .zip(&self.output_bias)
            .map(|(r, &b)| dot(r, &h) + b)
            .collect();
        let g_f = cot(&f);
        check_dim(f.len(), g_f.len())?;
        let mut g_h = self.output.matvec_t(&g_f)?;
        for (g, &p) in g_h.iter_mut().zip(&pre) {
            *g = *g * lru_derivative(p, slope);
        }
        let g_x = self.hidden.matvec_t(&g_h)?;
        Ok((f, g_x))
    }
}

/// Cosine of the angle between two vectors; zero when either is zero.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    check_dim(a.len(), b.len())?;
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == T::zero() || nb == T::zero() {
        return Ok(T::zero());
    }
    Ok((dot(a, b) / (na * nb)).max(-T::one()).min(T::one()))
}
