//! Output correction for sampled styles.
//!
//! Truncation blends a style toward the W-space mean. Compression works in
//! the principal-component basis of V: coordinates whose magnitude exceeds
//! `τσ` (σ the largest principal standard deviation) are shrunk
//! logarithmically, the rest are left alone, and the result is mapped back
//! to W.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianModel;
use crate::latent::{v_to_w, w_to_v, LatentV, LatentW, StyleStack};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const DEFAULT_PSI: f64 = 0.7;
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum CorrectionConfig {
    Truncation { psi: f64 },
    Compression { tau: f64 },
}

impl CorrectionConfig {
    pub fn truncation(psi: f64) -> Result<Self> {
        let c = Self::Truncation { psi };
        c.validate()?;
        Ok(c)
    }

    pub fn compression(tau: f64) -> Result<Self> {
        let c = Self::Compression { tau };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Truncation { psi } if !(0.0..=1.0).contains(&psi) => {
                Err(Error::InvalidArgument(format!("psi must lie in [0, 1], got {psi}")))
            }
            Self::Compression { tau } if !(tau > 0.0 && tau.is_finite()) => {
                Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")))
            }
            _ => Ok(()),
        }
    }

    /// `τσ` for compression under `model`; `None` for truncation.
    pub fn threshold<T: Scalar>(&self, model: &GaussianModel<T>) -> Option<T> {
        match *self {
            Self::Compression { tau } => Some(T::lit(tau) * model.sigma_max()),
            Self::Truncation { .. } => None,
        }
    }
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self::Compression { tau: DEFAULT_TAU }
    }
}

/// `ψ w + (1 − ψ) w̄`
pub fn truncate<T: Scalar>(w: &LatentW<T>, model: &GaussianModel<T>, psi: T) -> Result<LatentW<T>> {
    check_dim(model.dim(), w.dim())?;
    Ok(LatentW::from_vec_unchecked(truncate_slice(w.as_slice(), model.mean_w(), psi)))
}

fn truncate_slice<T: Scalar>(w: &[T], mean: &[T], psi: T) -> Vec<T> {
    let keep = T::one() - psi;
    w.iter().zip(mean).map(|(&x, &m)| psi * x + keep * m).collect()
}

/// Principal-component coordinates `Eᵀ (v − μ)`.
pub fn to_pc<T: Scalar>(v: &LatentV<T>, model: &GaussianModel<T>) -> Result<Vec<T>> {
    check_dim(model.dim(), v.dim())?;
    let centered: Vec<T> = v.as_slice().iter().zip(model.mean_v()).map(|(&x, &m)| x - m).collect();
    model.eigvecs().matvec_t(&centered)
}

/// `E vᵖ + μ`
pub fn from_pc<T: Scalar>(vp: &[T], model: &GaussianModel<T>) -> Result<LatentV<T>> {
    check_dim(model.dim(), vp.len())?;
    let mut v = model.eigvecs().matvec(vp)?;
    for (x, &m) in v.iter_mut().zip(model.mean_v()) {
        *x = *x + m;
    }
    Ok(LatentV::from_vec_unchecked(v))
}

/// Logarithmic compression of a single coordinate above `threshold`.
#[inline]
pub fn compress_scalar<T: Scalar>(x: T, threshold: T) -> T {
    let a = x.abs();
    if a > threshold {
        x.signum() * threshold * ((a / threshold).ln() + T::one())
    } else {
        x
    }
}

/// Elementwise compression with threshold `τσ`.
pub fn compress_pc<T: Scalar>(vp: &[T], tau: T, sigma: T) -> Result<Vec<T>> {
    let threshold = tau * sigma;
    if !(threshold > T::zero()) {
        return Err(Error::InvalidArgument("compression threshold must be positive".into()));
    }
    Ok(vp.iter().map(|&x| compress_scalar(x, threshold)).collect())
}

/// Applies the configured correction to one style.
pub fn correct_latent<T: Scalar>(
    w: &LatentW<T>,
    model: &GaussianModel<T>,
    config: &CorrectionConfig,
) -> Result<LatentW<T>> {
    config.validate()?;
    match *config {
        CorrectionConfig::Truncation { psi } => truncate(w, model, T::lit(psi)),
        CorrectionConfig::Compression { tau } => {
            let vp = to_pc(&w_to_v(w), model)?;
            let compressed = compress_pc(&vp, T::lit(tau), model.sigma_max())?;
            Ok(v_to_w(&from_pc(&compressed, model)?))
        }
    }
}

/// Corrects every row of a batch (or a W⁺ stack) independently.
pub fn correct_rows<T: Scalar>(
    rows: &Matrix<T>,
    model: &GaussianModel<T>,
    config: &CorrectionConfig,
) -> Result<Matrix<T>> {
    check_dim(model.dim(), rows.cols())?;
    config.validate()?;
    let out: Result<Vec<Vec<T>>> = (0..rows.rows())
        .into_par_iter()
        .map(|r| {
            let w = LatentW::from_vec_unchecked(rows.row(r).to_vec());
            correct_latent(&w, model, config).map(LatentW::into_vec)
        })
        .collect();
    let data: Vec<T> = out?.into_iter().flatten().collect();
    Matrix::from_vec(rows.rows(), rows.cols(), data)
}

pub fn correct_stack<T: Scalar>(
    stack: &StyleStack<T>,
    model: &GaussianModel<T>,
    config: &CorrectionConfig,
) -> Result<StyleStack<T>> {
    Ok(StyleStack::from_matrix_unchecked(correct_rows(stack.matrix(), model, config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_2d() -> GaussianModel<f64> {
        let cov = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 2.0]]).unwrap();
        GaussianModel::from_moments(vec![0.5, -0.25], cov, Some(vec![0.0, 0.0]), 100).unwrap()
    }

    #[test]
    fn truncation_hand_cases() {
        let m = model_2d();
        let w = LatentW::new(vec![2.0, -4.0]).unwrap();
        let t = truncate(&w, &m, 0.7).unwrap();
        assert!((t.as_slice()[0] - 1.4).abs() < 1e-15);
        assert!((t.as_slice()[1] + 2.8).abs() < 1e-15);
        assert_eq!(truncate(&w, &m, 1.0).unwrap(), w);
        assert_eq!(truncate(&w, &m, 0.0).unwrap().as_slice(), m.mean_w());
    }

    #[test]
    fn compression_hand_cases() {
        assert_eq!(compress_pc(&[0.3, -1.0, 1.0], 1.0, 1.0).unwrap(), vec![0.3, -1.0, 1.0]);
        let e = std::f64::consts::E;
        let out = compress_pc(&[e, -e], 1.0, 1.0).unwrap();
        assert!((out[0] - 2.0).abs() < 1e-15);
        assert!((out[1] + 2.0).abs() < 1e-15);
        assert!(compress_pc(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn pc_basis_round_trip() {
        let m = model_2d();
        let mu = LatentV::new(m.mean_v().to_vec()).unwrap();
        assert!(to_pc(&mu, &m).unwrap().iter().all(|&x| x.abs() < 1e-15));
        let e0: Vec<f64> = m.eigvecs().column(0);
        let v = LatentV::new(vec![m.mean_v()[0] + e0[0], m.mean_v()[1] + e0[1]]).unwrap();
        let p = to_pc(&v, &m).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-10 && p[1].abs() < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(CorrectionConfig::truncation(1.2).is_err());
        assert!(CorrectionConfig::truncation(-0.1).is_err());
        assert!(CorrectionConfig::compression(0.0).is_err());
        assert!(CorrectionConfig::compression(0.5).is_ok());
        let m = model_2d();
        let c = CorrectionConfig::compression(0.5).unwrap();
        assert_eq!(c.threshold(&m), Some(0.5 * m.sigma_max()));
        assert_eq!(CorrectionConfig::truncation(0.7).unwrap().threshold(&m), None);
    }

    #[test]
    fn mean_style_is_fixed_by_compression() {
        let m = model_2d();
        let w = v_to_w(&LatentV::new(m.mean_v().to_vec()).unwrap());
        let c = correct_latent(&w, &m, &CorrectionConfig::default()).unwrap();
        for (a, b) in c.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
