//! Desk-scale experiment protocols: interpolation error curves, latent and
//! image reconstruction errors, principal-component magnitude profiles,
//! Fréchet-distance matching of the two correction methods, and the prior
//! weight sweep.
//!
//! Reports store `f64` regardless of the scalar type used to compute them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correction::{correct_rows, to_pc, CorrectionConfig};
use crate::error::{check_dim, Error, Result};
use crate::features::{cosine_similarity, FeatureNet};
use crate::gaussian::{frechet_from_moments, mean_and_covariance, GaussianModel};
use crate::generator::GeneratorBundle;
use crate::inversion::{invert, invert_from, InversionConfig, ReconstructionLoss, TargetSpace};
use crate::latent::{w_to_v, Latent, LatentW, Lerp, StyleStack};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, stream};
use crate::scalar::Scalar;

/// Euclidean distance between two latents of the same shape.
pub fn latent_error<T: Scalar>(estimate: &[T], truth: &[T]) -> Result<T> {
    check_dim(truth.len(), estimate.len())?;
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt())
}

/// Feature vectors for each row of `images`.
pub fn embed_batch<T: Scalar>(images: &Matrix<T>, net: &FeatureNet<T>) -> Result<Matrix<T>> {
    let rows: Vec<Vec<T>> = (0..images.rows())
        .into_par_iter()
        .map(|i| net.embed(images.row(i)))
        .collect::<Result<_>>()?;
    let k = net.output_dim();
    Matrix::from_vec(rows.len(), k, rows.into_iter().flatten().collect())
}

/// Fréchet distance between Gaussians fitted to two sets of embedded features.
pub fn fid_from_features<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    if a.rows() < 2 || b.rows() < 2 {
        return Err(Error::InvalidArgument("Fréchet distance needs at least two samples per set".into()));
    }
    let (ma, ca) = mean_and_covariance(a);
    let (mb, cb) = mean_and_covariance(b);
    frechet_from_moments(&ma, &ca, &mb, &cb)
}

/// Fréchet distance between two image sets in the feature space of `net`.
pub fn fid_proxy<T: Scalar>(images_a: &Matrix<T>, images_b: &Matrix<T>, net: &FeatureNet<T>) -> Result<T> {
    if images_a.rows() == 0 || images_b.rows() == 0 {
        return Err(Error::InvalidArgument("empty image set".into()));
    }
    fid_from_features(&embed_batch(images_a, net)?, &embed_batch(images_b, net)?)
}

/// Cosine similarity of two images' embeddings.
pub fn identity_similarity<T: Scalar>(image_a: &[T], image_b: &[T], net: &FeatureNet<T>) -> Result<T> {
    cosine_similarity(&net.embed(image_a)?, &net.embed(image_b)?)
}

/// Standard deviation of each pixel value over the batch, averaged over pixels.
pub fn mean_pixel_std<T: Scalar>(images: &Matrix<T>) -> T {
    let n = images.rows();
    if n < 2 {
        return T::zero();
    }
    let mean = crate::gaussian::column_means(images);
    let mut var = vec![T::zero(); images.cols()];
    for row in images.row_iter() {
        for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
            *v = *v + (x - m) * (x - m);
        }
    }
    let denom = T::from_usize(n - 1).expect("count fits scalar");
    let cols = T::from_usize(images.cols()).expect("count fits scalar");
    var.into_iter().map(|v| (v / denom).sqrt()).sum::<T>() / cols
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GroupStats {
    fn from_rows(rows: &[Vec<f64>], k: usize) -> Self {
        let n = rows.len();
        let mut mean = vec![0.0; k];
        let mut std = vec![0.0; k];
        if n > 0 {
            for r in rows {
                for (m, x) in mean.iter_mut().zip(r) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
        }
        if n > 1 {
            for r in rows {
                for ((s, x), m) in std.iter_mut().zip(r).zip(&mean) {
                    *s += (x - m) * (x - m);
                }
            }
            std.iter_mut().for_each(|s| *s = (*s / (n - 1) as f64).sqrt());
        }
        Self { count: n, mean, std }
    }
}

/// Magnitudes of the leading principal-component coordinates, split by a
/// tail flag (`max_i |vᵖ_i| > τσ` over all coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcProfile {
    pub components: usize,
    pub tau: f64,
    pub threshold: f64,
    pub sample_count: usize,
    pub flagged_fraction: f64,
    pub flagged: GroupStats,
    pub unflagged: GroupStats,
}

pub fn pc_magnitude_profile<T: Scalar>(
    latents_w: &Matrix<T>,
    model: &GaussianModel<T>,
    k: usize,
    tau: f64,
) -> Result<PcProfile> {
    check_dim(model.dim(), latents_w.cols())?;
    if k > model.dim() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds dimension {}", model.dim())));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("tau must be positive".into()));
    }
    let threshold = tau * model.sigma_max().as_f64();
    let coords: Vec<(bool, Vec<f64>)> = (0..latents_w.rows())
        .into_par_iter()
        .map(|r| {
            let w = LatentW::from_vec_unchecked(latents_w.row(r).to_vec());
            let vp = to_pc(&w_to_v(&w), model)?;
            let flagged = vp.iter().any(|x| x.abs().as_f64() > threshold);
            Ok((flagged, vp[..k].iter().map(|x| x.abs().as_f64()).collect()))
        })
        .collect::<Result<_>>()?;
    let (flagged, unflagged): (Vec<_>, Vec<_>) = coords.into_iter().partition(|(f, _)| *f);
    let flagged: Vec<Vec<f64>> = flagged.into_iter().map(|(_, v)| v).collect();
    let unflagged: Vec<Vec<f64>> = unflagged.into_iter().map(|(_, v)| v).collect();
    let n = latents_w.rows();
    Ok(PcProfile {
        components: k,
        tau,
        threshold,
        sample_count: n,
        flagged_fraction: if n == 0 { 0.0 } else { flagged.len() as f64 / n as f64 },
        flagged: GroupStats::from_rows(&flagged, k),
        unflagged: GroupStats::from_rows(&unflagged, k),
    })
}

/// Eleven evenly spaced points on `[0, 1]`.
pub fn default_t_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [0.0, 1e-5, 1e-4, 1e-3];

/// One inversion configuration under comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub inversion: InversionConfig,
}

impl Condition {
    pub fn new(label: impl Into<String>, inversion: InversionConfig) -> Self {
        Self {
            label: label.into(),
            inversion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSetup {
    pub pairs: usize,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    /// Start every inversion at its ground-truth latent, without noise.
    pub oracle_init: bool,
}

impl InterpolationSetup {
    pub fn new(pairs: usize, seed: u64) -> Self {
        Self {
            pairs,
            t_grid: default_t_grid(),
            seed,
            oracle_init: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(Error::InvalidArgument("at least one pair is required".into()));
        }
        if self.t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidArgument("t values must lie in [0, 1]".into()));
        }
        for needed in [0.0, 0.5, 1.0] {
            if !self.t_grid.contains(&needed) {
                return Err(Error::InvalidArgument(format!("t grid must contain {needed}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair: usize,
    /// Image error at each grid point.
    pub errors: Vec<f64>,
    pub latent_errors: [f64; 2],
    pub final_image_errors: [f64; 2],
    pub final_prior_energies: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPair {
    pub pair: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub label: String,
    pub inversion: InversionConfig,
    pub curve: Vec<CurvePoint>,
    /// Mean over pairs of the errors at `t = 0` and `t = 1`.
    pub endpoint_error: f64,
    pub midpoint_error: f64,
    pub mean_latent_error: f64,
    pub median_latent_error: f64,
    pub failures: usize,
    pub records: Vec<PairRecord>,
    pub failed: Vec<FailedPair>,
}

impl ConditionReport {
    fn aggregate(label: String, inversion: InversionConfig, t_grid: &[f64], records: Vec<PairRecord>, failed: Vec<FailedPair>) -> Self {
        let n = records.len();
        let curve = t_grid
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let col: Vec<f64> = records.iter().map(|r| r.errors[j]).collect();
                let (mean_error, std_error) = mean_std(&col);
                CurvePoint { t, mean_error, std_error }
            })
            .collect::<Vec<_>>();
        let at = |t: f64| {
            let j = t_grid.iter().position(|&x| x == t).expect("grid validated");
            curve[j].mean_error
        };
        let latents: Vec<f64> = records.iter().flat_map(|r| r.latent_errors).collect();
        let endpoint_error = if n == 0 { f64::NAN } else { 0.5 * (at(0.0) + at(1.0)) };
        Self {
            label,
            inversion,
            midpoint_error: if n == 0 { f64::NAN } else { at(0.5) },
            endpoint_error,
            mean_latent_error: mean_std(&latents).0,
            median_latent_error: median(&latents),
            failures: failed.len(),
            curve,
            records,
            failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub setup: InterpolationSetup,
    pub conditions: Vec<ConditionReport>,
}

impl ExperimentReport {
    pub fn condition(&self, label: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.label == label)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Median; NaN for an empty slice.
pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ground-truth latent for pair `pair`, endpoint `end`: a single style for W,
/// independent styles per scale for W⁺.
pub fn ground_truth_latent<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    space: TargetSpace,
    seed: u64,
    pair: usize,
    end: usize,
) -> Latent<T> {
    let key = derive_seed(seed, stream::EXPERIMENT_PAIRS, space as u64);
    let s = bundle.scales();
    let index = 2 * pair + end;
    match space {
        TargetSpace::W => {
            let m = bundle.sample_styles_range(key, index, 1);
            Latent::W(LatentW::from_vec_unchecked(m.into_vec()))
        }
        TargetSpace::WPlus => {
            Latent::WPlus(StyleStack::from_matrix_unchecked(bundle.sample_styles_range(key, index * s, s)))
        }
    }
}

fn run_pair<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    condition: &Condition,
    setup: &InterpolationSetup,
    loss: &ReconstructionLoss<T>,
    pair: usize,
) -> Result<PairRecord> {
    let space = condition.inversion.target_space;
    let s = bundle.scales();
    let truths = [0, 1].map(|end| ground_truth_latent(bundle, space, setup.seed, pair, end));
    let mut estimates = Vec::with_capacity(2);
    let mut final_image_errors = [0.0; 2];
    let mut final_prior_energies = [0.0; 2];
    let mut latent_errors = [0.0; 2];
    for (end, truth) in truths.iter().enumerate() {
        let target = bundle.synthesize(&truth.to_stack(s)?)?;
        let mut config = condition.inversion;
        config.seed = derive_seed(setup.seed, stream::EXPERIMENT_INVERSION, (2 * pair + end) as u64);
        let result = if setup.oracle_init {
            invert_from(&target, bundle, model, &config.without_noise(), truth)?
        } else {
            invert(&target, bundle, model, &config)?
        };
        final_image_errors[end] = result.final_image_error.as_f64();
        final_prior_energies[end] = prior_energy(model, &result.latent)?.as_f64();
        latent_errors[end] = latent_error(result.latent.as_slice(), truth.as_slice())?.as_f64();
        estimates.push(result.latent);
    }
    let errors = setup
        .t_grid
        .iter()
        .map(|&t| {
            let t = T::lit(t);
            let est = bundle.synthesize(&estimates[0].lerp(&estimates[1], t)?.to_stack(s)?)?;
            let truth = bundle.synthesize(&truths[0].lerp(&truths[1], t)?.to_stack(s)?)?;
            Ok(loss.value(&est, &truth)?.as_f64())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairRecord {
        pair,
        errors,
        latent_errors,
        final_image_errors,
        final_prior_energies,
    })
}

fn prior_energy<T: Scalar>(model: &GaussianModel<T>, latent: &Latent<T>) -> Result<T> {
    latent
        .as_slice()
        .chunks_exact(model.dim())
        .map(|row| crate::latent::prior_energy_w(model, row).map(|(e, _)| e))
        .sum()
}

/// Inverts both endpoints of every pair under each condition and compares
/// the interpolations of the estimates against the ground-truth
/// interpolations. Pairs whose inversion fails are recorded and left out of
/// the aggregates.
pub fn interpolation_experiment<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    conditions: &[Condition],
    setup: &InterpolationSetup,
) -> Result<ExperimentReport> {
    setup.validate()?;
    if conditions.is_empty() {
        return Err(Error::InvalidArgument("no conditions given".into()));
    }
    let mut reports = Vec::with_capacity(conditions.len());
    for condition in conditions {
        condition.inversion.validate()?;
        let inv = &condition.inversion;
        let loss = ReconstructionLoss::new(inv.loss_kind, inv.proxy_seed, bundle.image_shape().len());
        let outcomes: Vec<(usize, Result<PairRecord>)> = (0..setup.pairs)
            .into_par_iter()
            .map(|pair| (pair, run_pair(bundle, model, condition, setup, &loss, pair)))
            .collect();
        let mut records = Vec::new();
        let mut failed = Vec::new();
        for (pair, outcome) in outcomes {
            match outcome {
                Ok(r) => records.push(r),
                Err(e @ (Error::Diverged { .. } | Error::NonFinite(_))) => failed.push(FailedPair {
                    pair,
                    message: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        reports.push(ConditionReport::aggregate(
            condition.label.clone(),
            *inv,
            &setup.t_grid,
            records,
            failed,
        ));
    }
    Ok(ExperimentReport {
        setup: setup.clone(),
        conditions: reports,
    })
}

/// Label used for a λ value in sweeps.
pub fn lambda_label(lambda: f64) -> String {
    format!("lambda={lambda:e}")
}

/// One interpolation experiment per prior weight, all sharing seeds.
pub fn lambda_sweep<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    base: &InversionConfig,
    lambdas: &[f64],
    setup: &InterpolationSetup,
) -> Result<ExperimentReport> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::InvalidArgument("lambda grid must be nonempty and nonnegative".into()));
    }
    let conditions: Vec<Condition> = lambdas
        .iter()
        .map(|&l| Condition::new(lambda_label(l), base.with_prior_weight(l)))
        .collect();
    interpolation_experiment(bundle, model, &conditions, setup)
}

/// Where reconstruction targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TargetSource {
    /// Images of single styles from the generator under test.
    GeneratedW,
    /// Images of per-scale independent styles from the generator under test.
    GeneratedWPlus,
    /// Images from a second generator with the same dims and another seed.
    /// Their latents are unknown, so only image errors are reported.
    OutOfModel { generator_seed: u64 },
}

impl TargetSource {
    pub fn label(&self) -> &'static str {
        match self {
            Self::GeneratedW => "generated-w",
            Self::GeneratedWPlus => "generated-wplus",
            Self::OutOfModel { .. } => "out-of-model",
        }
    }

    /// The three default sources; the second generator's seed is derived
    /// from the bundle seed.
    pub fn defaults(bundle_seed: u64) -> Vec<Self> {
        vec![
            Self::GeneratedW,
            Self::GeneratedWPlus,
            Self::OutOfModel {
                generator_seed: derive_seed(bundle_seed, stream::GENERATOR_WEIGHTS, 1),
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSetup {
    pub targets: usize,
    pub sources: Vec<TargetSource>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub target: usize,
    pub image_error: f64,
    /// Absent for out-of-model targets.
    pub latent_error: Option<f64>,
    pub prior_energy: f64,
}

/// One (source, condition) cell of the reconstruction tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionCell {
    pub source: String,
    pub condition: String,
    pub inversion: InversionConfig,
    pub mean_image_error: f64,
    pub median_image_error: f64,
    /// NaN when no latent errors are defined.
    pub mean_latent_error: f64,
    pub median_latent_error: f64,
    pub mean_prior_energy: f64,
    pub failures: usize,
    pub records: Vec<TargetRecord>,
    pub failed: Vec<FailedPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub setup: ReconstructionSetup,
    pub cells: Vec<ReconstructionCell>,
}

impl ReconstructionReport {
    pub fn cell(&self, source: &str, condition: &str) -> Option<&ReconstructionCell> {
        self.cells.iter().find(|c| c.source == source && c.condition == condition)
    }
}

/// Ground-truth latent of reconstruction target `index` for an in-model
/// source.
pub fn reconstruction_truth<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    space: TargetSpace,
    seed: u64,
    index: usize,
) -> Latent<T> {
    let key = derive_seed(seed, stream::RECONSTRUCTION_TARGETS, space as u64);
    let s = bundle.scales();
    match space {
        TargetSpace::W => Latent::W(LatentW::from_vec_unchecked(bundle.sample_styles_range(key, index, 1).into_vec())),
        TargetSpace::WPlus => {
            Latent::WPlus(StyleStack::from_matrix_unchecked(bundle.sample_styles_range(key, index * s, s)))
        }
    }
}

/// L2 error between latents of possibly different spaces, comparing full
/// stacks when the spaces differ.
fn cross_space_error<T: Scalar>(estimate: &Latent<T>, truth: &Latent<T>, scales: usize) -> Result<T> {
    match (estimate, truth) {
        (Latent::W(_), Latent::W(_)) | (Latent::WPlus(_), Latent::WPlus(_)) => {
            latent_error(estimate.as_slice(), truth.as_slice())
        }
        _ => latent_error(estimate.to_stack(scales)?.as_slice(), truth.to_stack(scales)?.as_slice()),
    }
}

/// Inverts generated and out-of-model targets under every condition and
/// reports image and latent reconstruction errors per (source, condition).
pub fn reconstruction_experiment<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    conditions: &[Condition],
    setup: &ReconstructionSetup,
) -> Result<ReconstructionReport> {
    if setup.targets == 0 || setup.sources.is_empty() || conditions.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one target, source and condition".into(),
        ));
    }
    let s = bundle.scales();
    let mut cells = Vec::new();
    for (source_index, source) in setup.sources.iter().enumerate() {
        let other = match source {
            TargetSource::OutOfModel { generator_seed } => {
                if *generator_seed == bundle.seed() {
                    return Err(Error::InvalidArgument(
                        "out-of-model generator must use a different seed".into(),
                    ));
                }
                Some(GeneratorBundle::<T>::init(*generator_seed, bundle.dims())?)
            }
            _ => None,
        };
        let targets: Vec<(Vec<T>, Option<Latent<T>>)> = (0..setup.targets)
            .into_par_iter()
            .map(|i| match (source, &other) {
                (TargetSource::GeneratedW, _) => {
                    let truth = reconstruction_truth(bundle, TargetSpace::W, setup.seed, i);
                    Ok((bundle.synthesize(&truth.to_stack(s)?)?, Some(truth)))
                }
                (TargetSource::GeneratedWPlus, _) => {
                    let truth = reconstruction_truth(bundle, TargetSpace::WPlus, setup.seed, i);
                    Ok((bundle.synthesize(&truth.to_stack(s)?)?, Some(truth)))
                }
                (TargetSource::OutOfModel { .. }, Some(g)) => {
                    let truth = reconstruction_truth(g, TargetSpace::W, setup.seed, i);
                    Ok((g.synthesize(&truth.to_stack(s)?)?, None))
                }
                (TargetSource::OutOfModel { .. }, None) => unreachable!("second generator built above"),
            })
            .collect::<Result<_>>()?;

        for condition in conditions {
            condition.inversion.validate()?;
            let outcomes: Vec<(usize, Result<TargetRecord>)> = targets
                .par_iter()
                .enumerate()
                .map(|(i, (image, truth))| {
                    let mut config = condition.inversion;
                    config.seed = derive_seed(
                        derive_seed(setup.seed, stream::RECONSTRUCTION_INVERSION, source_index as u64),
                        stream::RECONSTRUCTION_INVERSION,
                        i as u64,
                    );
                    let run = || -> Result<TargetRecord> {
                        let result = invert(image, bundle, model, &config)?;
                        let latent_error = match truth {
                            Some(t) => Some(cross_space_error(&result.latent, t, s)?.as_f64()),
                            None => None,
                        };
                        Ok(TargetRecord {
                            target: i,
                            image_error: result.final_image_error.as_f64(),
                            latent_error,
                            prior_energy: prior_energy(model, &result.latent)?.as_f64(),
                        })
                    };
                    (i, run())
                })
                .collect();
            let mut records = Vec::new();
            let mut failed = Vec::new();
            for (i, outcome) in outcomes {
                match outcome {
                    Ok(r) => records.push(r),
                    Err(e @ (Error::Diverged { .. } | Error::NonFinite(_))) => failed.push(FailedPair {
                        pair: i,
                        message: e.to_string(),
                    }),
                    Err(e) => return Err(e),
                }
            }
            let image: Vec<f64> = records.iter().map(|r| r.image_error).collect();
            let latent: Vec<f64> = records.iter().filter_map(|r| r.latent_error).collect();
            let prior: Vec<f64> = records.iter().map(|r| r.prior_energy).collect();
            cells.push(ReconstructionCell {
                source: source.label().to_string(),
                condition: condition.label.clone(),
                inversion: condition.inversion,
                mean_image_error: mean_std(&image).0,
                median_image_error: median(&image),
                mean_latent_error: mean_std(&latent).0,
                median_latent_error: median(&latent),
                mean_prior_energy: mean_std(&prior).0,
                failures: failed.len(),
                records,
                failed,
            });
        }
    }
    Ok(ReconstructionReport {
        setup: setup.clone(),
        cells,
    })
}

/// Writes one curve as CSV with columns `t, mean_error, std_error, condition`.
pub fn write_curve_csv<W: Write>(w: W, report: &ConditionReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "mean_error", "std_error", "condition"])
        .map_err(csv_error)?;
    for p in &report.curve {
        out.write_record([
            p.t.to_string(),
            p.mean_error.to_string(),
            p.std_error.to_string(),
            report.label.clone(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Seeds and sizes for matching truncation against compression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSetup {
    pub taus: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub fid_net_seed: u64,
    pub identity_net_seed: u64,
    /// Accepted relative gap between matched Fréchet distances.
    pub tolerance: f64,
    pub max_bisection_steps: usize,
}

impl TradeoffSetup {
    pub fn new(taus: Vec<f64>, samples: usize, seed: u64) -> Self {
        Self {
            taus,
            samples,
            seed,
            fid_net_seed: derive_seed(seed, stream::FEATURE_NET, 0),
            identity_net_seed: derive_seed(seed, stream::FEATURE_NET, 1),
            tolerance: 0.05,
            max_bisection_steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPoint {
    pub tau: f64,
    pub psi: f64,
    pub threshold: f64,
    pub fid_compression: f64,
    pub fid_truncation: f64,
    pub relative_gap: f64,
    pub matched: bool,
    pub bisection_steps: usize,
    pub identity_compression: f64,
    pub identity_truncation: f64,
    pub pixel_std_compression: f64,
    pub pixel_std_truncation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub setup: TradeoffSetup,
    /// Distance between the uncorrected batch and the reference batch.
    pub fid_uncorrected: f64,
    pub pixel_std_uncorrected: f64,
    pub points: Vec<MatchedPoint>,
}

struct CorrectedBatch<T> {
    fid: T,
    identity: T,
    pixel_std: T,
}

fn evaluate_correction<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    styles: &Matrix<T>,
    original_ids: &Matrix<T>,
    reference_features: &Matrix<T>,
    fid_net: &FeatureNet<T>,
    id_net: &FeatureNet<T>,
    config: &CorrectionConfig,
) -> Result<CorrectedBatch<T>> {
    let corrected = correct_rows(styles, model, config)?;
    let images = bundle.synthesize_batch(&corrected)?;
    let fid = fid_from_features(&embed_batch(&images, fid_net)?, reference_features)?;
    let ids = embed_batch(&images, id_net)?;
    let sims: Vec<T> = (0..ids.rows())
        .map(|i| cosine_similarity(ids.row(i), original_ids.row(i)))
        .collect::<Result<_>>()?;
    let n = T::from_usize(sims.len().max(1)).expect("count fits scalar");
    Ok(CorrectedBatch {
        fid,
        identity: sims.into_iter().sum::<T>() / n,
        pixel_std: mean_pixel_std(&images),
    })
}

/// For each τ, finds by bisection the ψ whose truncated batch has the same
/// Fréchet distance to an uncorrected reference batch as the compressed one,
/// then compares identity preservation and diversity at that operating point.
pub fn fid_tradeoff<T: Scalar>(
    bundle: &GeneratorBundle<T>,
    model: &GaussianModel<T>,
    setup: &TradeoffSetup,
) -> Result<TradeoffReport> {
    if setup.samples < 2 || setup.taus.is_empty() {
        return Err(Error::InvalidArgument("need at least two samples and one tau".into()));
    }
    let image_len = bundle.image_shape().len();
    let fid_net = FeatureNet::with_defaults(setup.fid_net_seed, image_len);
    let id_net = FeatureNet::with_defaults(setup.identity_net_seed, image_len);
    let reference = bundle.synthesize_batch(&bundle.sample_styles(
        derive_seed(setup.seed, stream::REFERENCE_BATCH, 0),
        setup.samples,
    ))?;
    let reference_features = embed_batch(&reference, &fid_net)?;
    let styles = bundle.sample_styles(derive_seed(setup.seed, stream::EVAL_BATCH, 0), setup.samples);
    let originals = bundle.synthesize_batch(&styles)?;
    let original_ids = embed_batch(&originals, &id_net)?;
    let fid_uncorrected = fid_from_features(&embed_batch(&originals, &fid_net)?, &reference_features)?;
    let eval = |config: CorrectionConfig| {
        evaluate_correction(
            bundle,
            model,
            &styles,
            &original_ids,
            &reference_features,
            &fid_net,
            &id_net,
            &config,
        )
    };

    let mut points = Vec::with_capacity(setup.taus.len());
    for &tau in &setup.taus {
        let comp = eval(CorrectionConfig::compression(tau)?)?;
        let target = comp.fid.as_f64();
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut best: Option<(f64, f64, CorrectedBatch<T>)> = None;
        let mut steps = 0;
        while steps < setup.max_bisection_steps {
            steps += 1;
            let psi = 0.5 * (lo + hi);
            let trunc = eval(CorrectionConfig::truncation(psi)?)?;
            let f = trunc.fid.as_f64();
            let gap = (f - target).abs() / target;
            if best.as_ref().map_or(true, |(g, _, _)| gap < *g) {
                best = Some((gap, psi, trunc));
            }
            if gap <= setup.tolerance {
                break;
            }
            // Distance to the reference shrinks as ψ grows toward 1.
            if f > target {
                lo = psi;
            } else {
                hi = psi;
            }
        }
        let (gap, psi, trunc) = best.expect("at least one step");
        points.push(MatchedPoint {
            tau,
            psi,
            threshold: tau * model.sigma_max().as_f64(),
            fid_compression: target,
            fid_truncation: trunc.fid.as_f64(),
            relative_gap: gap,
            matched: gap <= setup.tolerance,
            bisection_steps: steps,
            identity_compression: comp.identity.as_f64(),
            identity_truncation: trunc.identity.as_f64(),
            pixel_std_compression: comp.pixel_std.as_f64(),
            pixel_std_truncation: trunc.pixel_std.as_f64(),
        });
    }
    Ok(TradeoffReport {
        setup: setup.clone(),
        fid_uncorrected: fid_uncorrected.as_f64(),
        pixel_std_uncorrected: mean_pixel_std(&originals).as_f64(),
        points,
    })
}
