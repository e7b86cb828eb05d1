//! Gaussian priors for the intermediate latent space of style-based
//! generators.
//!
//! Styles `w` produced by a mapping network that ends in a leaky ReLU of
//! slope 0.2 become close to Gaussian after undoing that activation,
//! `v = LRU₅(w)`. This crate fits a Gaussian to such `v`, uses its
//! Mahalanobis energy as a prior when inverting images into W or W⁺, and
//! offers a principal-component log compression as an alternative to the
//! truncation trick. A small seeded generator stands in for a pretrained
//! network so that every experiment runs on a desk.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision.
//!
//! Randomness is addressed by `(seed, stream, index)` through
//! [`rng::derive_seed`], so results do not depend on thread count.

pub mod adam;
pub mod correction;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod gaussian;
pub mod generator;
pub mod inversion;
pub mod io;
pub mod latent;
pub mod linalg;
pub mod rng;
pub mod scalar;

pub use correction::CorrectionConfig;
pub use error::{Error, Result};
pub use evaluation::ExperimentReport;
pub use gaussian::GaussianModel;
pub use generator::{GeneratorBundle, GeneratorDims};
pub use inversion::{InversionConfig, InversionResult, LossKind, TargetSpace};
pub use latent::{Latent, LatentV, LatentW, StyleStack};
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type GaussianModel64 = GaussianModel<f64>;
pub type GaussianModel32 = GaussianModel<f32>;
pub type GeneratorBundle64 = GeneratorBundle<f64>;
pub type GeneratorBundle32 = GeneratorBundle<f32>;
pub type LatentW64 = LatentW<f64>;
pub type LatentV64 = LatentV<f64>;
pub type StyleStack64 = StyleStack<f64>;
pub type Matrix64 = Matrix<f64>;
pub type InversionResult64 = InversionResult<f64>;
