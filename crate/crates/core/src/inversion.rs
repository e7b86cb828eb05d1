//! Latent inversion: find the style (W) or style stack (W⁺) whose generated
//! image reconstructs a target, optionally regularized by the Gaussian prior
//! in V-space.
//!
//! The objective is `L(G(x), I) + λ · E(x)` where `E` is the Mahalanobis
//! energy of `LRU₅(x)` (summed over rows for W⁺). It is minimized with ADAM,
//! starting from the W-space mean. During the first part of the run the
//! gradient is evaluated at a perturbed copy of the latent; the perturbation
//! amplitude decays quadratically to zero.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::adam::{AdamParams, AdamState};
use crate::error::{check_dim, Error, Result};
use crate::features::FeatureNet;
use crate::gaussian::GaussianModel;
use crate::generator::GeneratorBundle;
use crate::latent::{broadcast_style, prior_energy_w, Latent, LatentW, StyleStack};
use crate::linalg::Matrix;
use crate::rng::{rng_for, stream};
use crate::scalar::{all_finite, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSpace {
    W,
    WPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    PixelMse,
    FeatureProxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseRamp {
    /// Noise std as a fraction of the W-space spread.
    pub initial_std_factor: f64,
    /// Fraction of the run over which the noise decays to zero.
    pub ramp_fraction: f64,
}

impl Default for NoiseRamp {
    fn default() -> Self {
        Self {
            initial_std_factor: 0.05,
            ramp_fraction: 0.75,
        }
    }
}

impl NoiseRamp {
    /// `factor · spread · max(0, 1 − t / (ramp · T))²`
    pub fn std_at(&self, iteration: usize, total: usize, spread: f64) -> f64 {
        let horizon = self.ramp_fraction * total as f64;
        let remaining = (1.0 - iteration as f64 / horizon).max(0.0);
        self.initial_std_factor * spread * remaining * remaining
    }
}

/// Seed of the fixed feature network behind [`LossKind::FeatureProxy`].
pub const DEFAULT_PROXY_SEED: u64 = 0x5eed_1b1b;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub target_space: TargetSpace,
    pub prior_weight: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub noise_ramp: NoiseRamp,
    pub adam: AdamParams,
    pub loss_kind: LossKind,
    pub proxy_seed: u64,
    pub seed: u64,
}

impl InversionConfig {
    /// Full-length defaults for the given space.
    pub fn for_space(target_space: TargetSpace) -> Self {
        let (learning_rate, iterations) = match target_space {
            TargetSpace::W => (0.1, 1000),
            TargetSpace::WPlus => (0.05, 10_000),
        };
        Self {
            target_space,
            prior_weight: 1e-4,
            learning_rate,
            iterations,
            noise_ramp: NoiseRamp::default(),
            adam: AdamParams::default(),
            loss_kind: LossKind::PixelMse,
            proxy_seed: DEFAULT_PROXY_SEED,
            seed: 0,
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_prior_weight(mut self, prior_weight: f64) -> Self {
        self.prior_weight = prior_weight;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn without_noise(mut self) -> Self {
        self.noise_ramp.initial_std_factor = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return bad("prior weight must be finite and nonnegative");
        }
        if !(self.noise_ramp.ramp_fraction > 0.0 && self.noise_ramp.ramp_fraction <= 1.0) {
            return bad("ramp fraction must lie in (0, 1]");
        }
        if !(self.noise_ramp.initial_std_factor >= 0.0 && self.noise_ramp.initial_std_factor.is_finite()) {
            return bad("noise factor must be finite and nonnegative");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        let a = self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.epsilon > 0.0) {
            return bad("ADAM betas must lie in [0, 1) and epsilon be positive");
        }
        Ok(())
    }
}

/// Image distance plus its gradient with respect to the first argument.
#[derive(Debug, Clone)]
pub enum ReconstructionLoss<T> {
    PixelMse,
    FeatureProxy(FeatureNet<T>),
}

impl<T: Scalar> ReconstructionLoss<T> {
    pub fn new(kind: LossKind, proxy_seed: u64, image_len: usize) -> Self {
        match kind {
            LossKind::PixelMse => Self::PixelMse,
            LossKind::FeatureProxy => Self::FeatureProxy(FeatureNet::with_defaults(proxy_seed, image_len)),
        }
    }

    pub fn evaluate(&self, a: &[T], b: &[T]) -> Result<(T, Vec<T>)> {
        check_dim(a.len(), b.len())?;
        match self {
            Self::PixelMse => Ok(pixel_mse(a, b)),
            Self::FeatureProxy(net) => {
                let fb = net.embed(b)?;
                feature_mse(net, a, &fb)
            }
        }
    }

    pub fn value(&self, a: &[T], b: &[T]) -> Result<T> {
        check_dim(a.len(), b.len())?;
        match self {
            Self::PixelMse => Ok(pixel_mse(a, b).0),
            Self::FeatureProxy(net) => {
                let fa = net.embed(a)?;
                let fb = net.embed(b)?;
                Ok(mean_sq_diff(&fa, &fb))
            }
        }
    }
}

/// Mean squared difference and gradient `2 (a − b) / N`.
pub fn pixel_mse<T: Scalar>(a: &[T], b: &[T]) -> (T, Vec<T>) {
    let n = T::from_usize(a.len().max(1)).expect("length fits scalar");
    let two_over_n = T::lit(2.0) / n;
    let mut sum = T::zero();
    let grad = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let r = x - y;
            sum = sum + r * r;
            two_over_n * r
        })
        .collect();
    (sum / n, grad)
}

fn mean_sq_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = T::from_usize(a.len().max(1)).expect("length fits scalar");
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>() / n
}

fn feature_mse<T: Scalar>(net: &FeatureNet<T>, a: &[T], target_features: &[T]) -> Result<(T, Vec<T>)> {
    let mut value = T::zero();
    let (_, grad) = net.embed_with_vjp(a, |fa| {
        value = mean_sq_diff(fa, target_features);
        pixel_mse(fa, target_features).1
    })?;
    Ok((value, grad))
}

/// Free-function form of [`ReconstructionLoss::evaluate`].
pub fn reconstruction_loss<T: Scalar>(
    image_a: &[T],
    image_b: &[T],
    loss: &ReconstructionLoss<T>,
) -> Result<(T, Vec<T>)> {
    loss.evaluate(image_a, image_b)
}

/// Value and gradient of the inversion objective at one latent.
#[derive(Debug, Clone)]
pub struct ObjectiveEval<T> {
    pub reconstruction: T,
    pub prior: T,
    pub total: T,
    /// Flattened like the latent: `d` entries for W, `s·d` row-major for W⁺.
    pub gradient: Vec<T>,
}

/// `L(G(x), I) + λ E(x)` for a fixed target.
pub struct InversionObjective<'a, T> {
    bundle: &'a GeneratorBundle<T>,
    model: &'a GaussianModel<T>,
    target: &'a [T],
    target_features: Option<Vec<T>>,
    loss: ReconstructionLoss<T>,
    prior_weight: T,
    space: TargetSpace,
}

impl<'a, T: Scalar> InversionObjective<'a, T> {
    pub fn new(
        target: &'a [T],
        bundle: &'a GeneratorBundle<T>,
        model: &'a GaussianModel<T>,
        config: &InversionConfig,
    ) -> Result<Self> {
        check_dim(bundle.image_shape().len(), target.len())?;
        if !all_finite(target) {
            return Err(Error::NonFinite("target image".into()));
        }
        check_dim(bundle.latent_dim(), model.dim())?;
        let loss = ReconstructionLoss::new(config.loss_kind, config.proxy_seed, target.len());
        let target_features = match &loss {
            ReconstructionLoss::FeatureProxy(net) => Some(net.embed(target)?),
            ReconstructionLoss::PixelMse => None,
        };
        Ok(Self {
            bundle,
            model,
            target,
            target_features,
            loss,
            prior_weight: T::lit(config.prior_weight),
            space: config.target_space,
        })
    }

    fn stack_of(&self, params: &[T]) -> Result<StyleStack<T>> {
        let d = self.bundle.latent_dim();
        let s = self.bundle.scales();
        match self.space {
            TargetSpace::W => {
                check_dim(d, params.len())?;
                Ok(broadcast_style(&LatentW::from_vec_unchecked(params.to_vec()), s))
            }
            TargetSpace::WPlus => {
                check_dim(s * d, params.len())?;
                Ok(StyleStack::from_matrix_unchecked(Matrix::from_vec(s, d, params.to_vec())?))
            }
        }
    }

    fn image_loss(&self, image: &[T]) -> Result<(T, Vec<T>)> {
        match (&self.loss, &self.target_features) {
            (ReconstructionLoss::FeatureProxy(net), Some(tf)) => feature_mse(net, image, tf),
            _ => self.loss.evaluate(image, self.target),
        }
    }

    /// Reconstruction loss only.
    pub fn reconstruction(&self, params: &[T]) -> Result<T> {
        let image = self.bundle.synthesize(&self.stack_of(params)?)?;
        Ok(self.image_loss(&image)?.0)
    }

    pub fn evaluate(&self, params: &[T]) -> Result<ObjectiveEval<T>> {
        let stack = self.stack_of(params)?;
        let trace = self.bundle.synthesize_trace(&stack)?;
        let (reconstruction, cot) = self.image_loss(trace.image())?;
        let rows = self.bundle.synthesis().backward(&trace, &cot)?;
        let d = self.bundle.latent_dim();
        let mut gradient = match self.space {
            TargetSpace::W => {
                let mut g = vec![T::zero(); d];
                for row in rows.row_iter() {
                    crate::scalar::axpy(T::one(), row, &mut g);
                }
                g
            }
            TargetSpace::WPlus => rows.into_vec(),
        };
        let mut prior = T::zero();
        if self.prior_weight > T::zero() {
            for (chunk, g_chunk) in params.chunks_exact(d).zip(gradient.chunks_exact_mut(d)) {
                let (e, g) = prior_energy_w(self.model, chunk)?;
                prior = prior + e;
                crate::scalar::axpy(self.prior_weight, &g, g_chunk);
            }
        }
        Ok(ObjectiveEval {
            reconstruction,
            prior,
            total: reconstruction + self.prior_weight * prior,
            gradient,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionResult<T> {
    pub latent: Latent<T>,
    pub loss_trace: Vec<T>,
    pub prior_trace: Vec<T>,
    pub final_image_error: T,
    pub iterations_run: usize,
    pub config: InversionConfig,
}

/// Inverts `target` starting from the W-space mean (broadcast for W⁺).
pub fn invert<T: Scalar>(
    target: &[T],
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    config: &InversionConfig,
) -> Result<InversionResult<T>> {
    let start = LatentW::new(model.mean_w().to_vec())?;
    let start = match config.target_space {
        TargetSpace::W => Latent::W(start),
        TargetSpace::WPlus => Latent::WPlus(broadcast_style(&start, bundle.scales())),
    };
    invert_from(target, bundle, model, config, &start)
}

/// Inverts `target` from an explicit starting latent of the configured space.
pub fn invert_from<T: Scalar>(
    target: &[T],
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    config: &InversionConfig,
    start: &Latent<T>,
) -> Result<InversionResult<T>> {
    config.validate()?;
    let objective = InversionObjective::new(target, bundle, model, config)?;
    match (config.target_space, start) {
        (TargetSpace::W, Latent::W(_)) | (TargetSpace::WPlus, Latent::WPlus(_)) => {}
        _ => return Err(Error::InvalidArgument("start latent does not match target space".into())),
    }
    let mut params = start.as_slice().to_vec();
    if !all_finite(&params) {
        return Err(Error::NonFinite("start latent".into()));
    }
    let spread = model
        .std_w()
        .iter()
        .map(|s| s.as_f64() * s.as_f64())
        .sum::<f64>()
        .sqrt();
    let mut rng = rng_for(config.seed, stream::INVERSION_NOISE, 0);
    let mut adam = AdamState::new(params.len());
    let mut loss_trace = Vec::with_capacity(config.iterations);
    let mut prior_trace = Vec::with_capacity(config.iterations);
    let mut probe = params.clone();

    for iteration in 0..config.iterations {
        let std = config.noise_ramp.std_at(iteration, config.iterations, spread);
        probe.copy_from_slice(&params);
        if std > 0.0 {
            for p in &mut probe {
                let n: f64 = StandardNormal.sample(&mut rng);
                *p = *p + T::lit(std * n);
            }
        }
        let eval = objective.evaluate(&probe)?;
        if !eval.total.is_finite() || !all_finite(&eval.gradient) {
            return Err(Error::Diverged { iteration });
        }
        loss_trace.push(eval.reconstruction);
        prior_trace.push(eval.prior);
        let delta = adam.step(&eval.gradient, config.learning_rate, config.adam)?;
        for (p, dp) in params.iter_mut().zip(delta) {
            *p = *p + dp;
        }
        if !all_finite(&params) {
            return Err(Error::Diverged { iteration });
        }
    }

    let final_image_error = objective.reconstruction(&params)?;
    if !final_image_error.is_finite() {
        return Err(Error::Diverged {
            iteration: config.iterations,
        });
    }
    let latent = match config.target_space {
        TargetSpace::W => Latent::W(LatentW::from_vec_unchecked(params)),
        TargetSpace::WPlus => Latent::WPlus(StyleStack::from_matrix_unchecked(Matrix::from_vec(
            bundle.scales(),
            bundle.latent_dim(),
            params,
        )?)),
    };
    Ok(InversionResult {
        latent,
        loss_trace,
        prior_trace,
        final_image_error,
        iterations_run: config.iterations,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_mse_hand_case() {
        let (l, g) = pixel_mse(&[0.0, 0.0], &[2.0, 0.0]);
        assert_eq!(l, 2.0);
        assert_eq!(g, vec![-2.0, 0.0]);
        let (l, g) = pixel_mse(&[1.0, -3.0], &[1.0, -3.0]);
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn proxy_loss_identical_images() {
        let loss = ReconstructionLoss::<f64>::new(LossKind::FeatureProxy, 3, 12);
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let (l, g) = loss.evaluate(&x, &x).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
        assert!(loss.evaluate(&x, &x[..3]).is_err());
    }

    #[test]
    fn noise_ramp_shape() {
        let r = NoiseRamp::default();
        assert_eq!(r.std_at(0, 100, 2.0), 0.1);
        assert!((r.std_at(25, 100, 2.0) - 0.1 * (2.0f64 / 3.0).powi(2)).abs() < 1e-15);
        assert_eq!(r.std_at(75, 100, 2.0), 0.0);
        assert_eq!(r.std_at(99, 100, 2.0), 0.0);
    }

    #[test]
    fn config_validation() {
        let base = InversionConfig::for_space(TargetSpace::W);
        assert!(base.validate().is_ok());
        assert!(base.with_prior_weight(-1.0).validate().is_err());
        assert!(base.with_iterations(0).validate().is_err());
        let mut c = base;
        c.noise_ramp.ramp_fraction = 0.0;
        assert!(c.validate().is_err());
        c.noise_ramp.ramp_fraction = 1.0;
        assert!(c.validate().is_ok());
        let wp = InversionConfig::for_space(TargetSpace::WPlus);
        assert_eq!((wp.learning_rate, wp.iterations), (0.05, 10_000));
        assert_eq!((base.learning_rate, base.iterations, base.prior_weight), (0.1, 1000, 1e-4));
    }
}
