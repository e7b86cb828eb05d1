//! Resolved command configurations and the defaults ← file ← flags merge.
//! Unknown keys are caught by the merge, which only accepts keys present in
//! the defaults.

use std::path::{Path, PathBuf};

use ganprior::correction::{DEFAULT_PSI, DEFAULT_TAU};
use ganprior::evaluation::DEFAULT_LAMBDA_GRID;
use ganprior::inversion::{InversionConfig, LossKind, NoiseRamp, TargetSpace, DEFAULT_PROXY_SEED};
use ganprior::GeneratorDims;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Overlays a `--config` file and then the explicitly given flags onto the
/// defaults of `C`. Unknown keys are rejected.
pub fn resolve<C, F>(flags: &F, config_file: Option<&Path>) -> Result<C, CliError>
where
    C: Default + Serialize + DeserializeOwned,
    F: Serialize,
{
    let mut merged = serde_json::to_value(C::default()).expect("config serializes");
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Format(format!("config {}: {e}", path.display())))?;
        overlay(&mut merged, file, "config file")?;
    }
    let given = serde_json::to_value(flags).expect("flags serialize");
    overlay(&mut merged, given, "flags")?;
    serde_json::from_value(merged).map_err(|e| CliError::Usage(e.to_string()))
}

fn overlay(base: &mut Value, top: Value, source: &str) -> Result<(), CliError> {
    let Value::Object(top) = top else {
        return Err(CliError::Usage(format!("{source} must be a JSON object")));
    };
    let base = base.as_object_mut().expect("configs are objects");
    for (k, v) in top {
        if v.is_null() {
            continue;
        }
        if !base.contains_key(&k) {
            return Err(CliError::Usage(format!("unknown key `{k}` in {source}")));
        }
        base.insert(k, v);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitGanConfig {
    pub seed: u64,
    pub latent_dim: usize,
    pub hidden_width: usize,
    pub mapping_layers: usize,
    pub scales: usize,
    pub channels: usize,
    pub base_resolution: usize,
}

impl Default for InitGanConfig {
    fn default() -> Self {
        let d = GeneratorDims::default();
        Self {
            seed: 0,
            latent_dim: d.latent_dim,
            hidden_width: d.hidden_width,
            mapping_layers: d.mapping_layers,
            scales: d.scales,
            channels: d.channels,
            base_resolution: d.base_resolution,
        }
    }
}

impl InitGanConfig {
    pub fn dims(&self) -> GeneratorDims {
        GeneratorDims {
            latent_dim: self.latent_dim,
            hidden_width: self.hidden_width,
            mapping_layers: self.mapping_layers,
            scales: self.scales,
            channels: self.channels,
            base_resolution: self.base_resolution,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitPriorConfig {
    pub bundle: PathBuf,
    pub samples: usize,
    pub seed: u64,
}

impl Default for FitPriorConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleConfig {
    pub bundle: PathBuf,
    pub count: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            count: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RenderConfig {
    pub bundle: PathBuf,
    pub latents: PathBuf,
    /// Treat the whole file as one W⁺ stack instead of one style per row.
    pub stack: bool,
}

/// Inversion settings shared by `invert` and the experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub lambda: f64,
    /// Defaults to the space's learning rate when absent.
    pub learning_rate: Option<f64>,
    /// Defaults to the space's iteration count when absent.
    pub iterations: Option<usize>,
    pub noise_factor: f64,
    pub ramp_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub loss: LossKind,
    pub proxy_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let base = InversionConfig::for_space(TargetSpace::W);
        Self {
            lambda: base.prior_weight,
            learning_rate: None,
            iterations: None,
            noise_factor: base.noise_ramp.initial_std_factor,
            ramp_fraction: base.noise_ramp.ramp_fraction,
            beta1: base.adam.beta1,
            beta2: base.adam.beta2,
            adam_epsilon: base.adam.epsilon,
            loss: base.loss_kind,
            proxy_seed: DEFAULT_PROXY_SEED,
        }
    }
}

impl OptimizerConfig {
    pub fn inversion(&self, space: TargetSpace, seed: u64) -> InversionConfig {
        let mut c = InversionConfig::for_space(space);
        c.prior_weight = self.lambda;
        if let Some(lr) = self.learning_rate {
            c.learning_rate = lr;
        }
        if let Some(it) = self.iterations {
            c.iterations = it;
        }
        c.noise_ramp = NoiseRamp {
            initial_std_factor: self.noise_factor,
            ramp_fraction: self.ramp_fraction,
        };
        c.adam.beta1 = self.beta1;
        c.adam.beta2 = self.beta2;
        c.adam.epsilon = self.adam_epsilon;
        c.loss_kind = self.loss;
        c.proxy_seed = self.proxy_seed;
        c.seed = seed;
        c
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertConfig {
    pub bundle: PathBuf,
    pub model: PathBuf,
    pub target: PathBuf,
    pub index: usize,
    pub space: TargetSpace,
    pub seed: u64,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

impl Default for InvertConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            model: PathBuf::new(),
            target: PathBuf::new(),
            index: 0,
            space: TargetSpace::W,
            seed: 0,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Truncation,
    Compression,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectConfig {
    pub model: PathBuf,
    pub latents: PathBuf,
    pub method: Method,
    pub psi: f64,
    pub tau: f64,
}

impl Default for CorrectConfig {
    fn default() -> Self {
        Self {
            model: PathBuf::new(),
            latents: PathBuf::new(),
            method: Method::Compression,
            psi: DEFAULT_PSI,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolationConfig {
    pub bundle: PathBuf,
    pub model: PathBuf,
    pub pairs: usize,
    pub spaces: Vec<TargetSpace>,
    pub seed: u64,
    pub oracle: bool,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            model: PathBuf::new(),
            pairs: 40,
            spaces: vec![TargetSpace::W, TargetSpace::WPlus],
            seed: 0,
            oracle: false,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub bundle: PathBuf,
    pub model: PathBuf,
    pub targets: usize,
    pub spaces: Vec<TargetSpace>,
    pub seed: u64,
    /// Derived from the bundle seed when absent.
    pub out_of_model_seed: Option<u64>,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            model: PathBuf::new(),
            targets: 20,
            spaces: vec![TargetSpace::W, TargetSpace::WPlus],
            seed: 0,
            out_of_model_seed: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaSweepConfig {
    pub bundle: PathBuf,
    pub model: PathBuf,
    pub pairs: usize,
    pub space: TargetSpace,
    pub lambdas: Vec<f64>,
    pub seed: u64,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

impl Default for LambdaSweepConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            model: PathBuf::new(),
            pairs: 40,
            space: TargetSpace::WPlus,
            lambdas: DEFAULT_LAMBDA_GRID.to_vec(),
            seed: 0,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidTradeoffConfig {
    pub bundle: PathBuf,
    pub model: PathBuf,
    pub taus: Vec<f64>,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for FidTradeoffConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            model: PathBuf::new(),
            taus: vec![0.25, 0.5, 1.0],
            samples: 2048,
            tolerance: 0.05,
            seed: 0,
        }
    }
}

/// Tail threshold factor for the profile; larger than the correction
/// default so that the flag marks genuine outliers.
pub const DEFAULT_PROFILE_TAU: f64 = 2.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcProfileConfig {
    pub bundle: PathBuf,
    pub model: PathBuf,
    /// Styles to profile; sampled from the generator when absent.
    pub latents: Option<PathBuf>,
    pub samples: usize,
    pub components: usize,
    pub tau: f64,
    pub seed: u64,
}

impl Default for PcProfileConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            model: PathBuf::new(),
            latents: None,
            samples: 10_000,
            components: 30,
            tau: DEFAULT_PROFILE_TAU,
            seed: 0,
        }
    }
}

pub fn require_path(p: &Path, name: &str) -> Result<(), CliError> {
    if p.as_os_str().is_empty() {
        return Err(CliError::Usage(format!("--{name} is required")));
    }
    Ok(())
}
