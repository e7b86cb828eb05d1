//! Seeded random-weight stand-in for a style-based generator.
//!
//! The mapping network takes a unit latent `z` through `L` dense layers, each
//! followed by a leaky ReLU with slope 0.2, producing a style `w`. The
//! synthesis network starts from a constant `b×b×c` feature map; each scale
//! `k` upsamples by two (except the first), modulates every channel with a
//! scale and bias computed affinely from style row `k`, mixes channels with a
//! fixed matrix, adds a fixed noise map and applies a leaky ReLU. A final
//! per-pixel linear map produces three output channels with no output
//! nonlinearity.
//!
//! Weights are regenerated from `(seed, dims)` and never serialized.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::io::ImageShape;
use crate::latent::{broadcast_style, lru_derivative, lru_scalar, LatentW, StyleStack, W_SLOPE};
use crate::linalg::Matrix;
use crate::rng::{rng_for, stream};
use crate::scalar::{all_finite, dot, Scalar};

/// Standard deviation of mapping-network biases.
const MAPPING_BIAS_STD: f64 = 0.1;
/// Standard deviation of the fixed per-scale noise maps.
const NOISE_STD: f64 = 0.1;
/// Slope of the synthesis activations.
const SYNTHESIS_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorDims {
    /// Latent and style dimensionality `d`.
    pub latent_dim: usize,
    /// Width `h` of the mapping network's hidden layers.
    pub hidden_width: usize,
    /// Number `L` of dense layers in the mapping network.
    pub mapping_layers: usize,
    /// Number of synthesis scales `s`.
    pub scales: usize,
    /// Feature channels per synthesis scale.
    pub channels: usize,
    /// Side length of the constant input feature map.
    pub base_resolution: usize,
}

impl Default for GeneratorDims {
    fn default() -> Self {
        Self {
            latent_dim: 32,
            hidden_width: 512,
            mapping_layers: 3,
            scales: 4,
            channels: 8,
            base_resolution: 2,
        }
    }
}

impl GeneratorDims {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("latent_dim", self.latent_dim),
            ("hidden_width", self.hidden_width),
            ("mapping_layers", self.mapping_layers),
            ("scales", self.scales),
            ("channels", self.channels),
            ("base_resolution", self.base_resolution),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.scales > 16 {
            return Err(Error::InvalidArgument("at most 16 scales".into()));
        }
        Ok(())
    }

    /// Side length at scale `k`.
    pub fn resolution(&self, k: usize) -> usize {
        self.base_resolution << k
    }

    pub fn image_shape(&self) -> ImageShape {
        let side = self.resolution(self.scales - 1);
        ImageShape {
            height: side,
            width: side,
            channels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense<T> {
    weight: Matrix<T>,
    bias: Vec<T>,
}

/// `M: Z → W`, every layer followed by `LRU₀.₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingNetwork<T> {
    layers: Vec<Dense<T>>,
}

impl<T: Scalar> MappingNetwork<T> {
    pub fn forward(&self, z: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_preactivation(z)?.into_iter().map(|v| lru_scalar(v, T::lit(W_SLOPE))).collect())
    }

    /// Output of the last dense layer before its activation.
    pub fn forward_preactivation(&self, z: &[T]) -> Result<Vec<T>> {
        let slope = T::lit(W_SLOPE);
        let mut x = z.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.weight.matvec(&x)?;
            for (yi, &b) in y.iter_mut().zip(&layer.bias) {
                *yi = *yi + b;
            }
            if i + 1 < self.layers.len() {
                y.iter_mut().for_each(|v| *v = lru_scalar(*v, slope));
            }
            x = y;
        }
        Ok(x)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn final_slope(&self) -> T {
        T::lit(W_SLOPE)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ScaleBlock<T> {
    /// `2c × d`: rows `0..c` give channel scales, rows `c..2c` channel biases.
    style_affine: Matrix<T>,
    style_bias: Vec<T>,
    mixing: Matrix<T>,
    noise: Vec<T>,
    resolution: usize,
}

/// `G: W⁺ → image`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisNetwork<T> {
    channels: usize,
    base: Vec<T>,
    blocks: Vec<ScaleBlock<T>>,
    to_rgb: Matrix<T>,
    rgb_bias: Vec<T>,
    shape: ImageShape,
}

/// Intermediate values of one forward pass, consumed by the reverse pass.
#[derive(Debug, Clone)]
pub struct SynthesisTrace<T> {
    inputs: Vec<Vec<T>>,
    modulations: Vec<Vec<T>>,
    preactivations: Vec<Vec<T>>,
    image: Vec<T>,
}

impl<T> SynthesisTrace<T> {
    pub fn image(&self) -> &[T] {
        &self.image
    }

    pub fn into_image(self) -> Vec<T> {
        self.image
    }
}

impl<T: Scalar> SynthesisTrace<T> {
    /// Smallest |pre-activation| over all scales, i.e. the distance to the
    /// nearest activation kink.
    pub fn kink_distance(&self) -> T {
        self.preactivations
            .iter()
            .flatten()
            .fold(T::infinity(), |m, &v| m.min(v.abs()))
    }
}

impl<T: Scalar> SynthesisNetwork<T> {
    pub fn scales(&self) -> usize {
        self.blocks.len()
    }

    pub fn image_shape(&self) -> ImageShape {
        self.shape
    }

    pub fn forward(&self, stack: &StyleStack<T>) -> Result<Vec<T>> {
        Ok(self.forward_trace(stack)?.image)
    }

    pub fn forward_trace(&self, stack: &StyleStack<T>) -> Result<SynthesisTrace<T>> {
        check_dim(self.blocks.len(), stack.scales())?;
        let c = self.channels;
        let slope = T::lit(SYNTHESIS_SLOPE);
        let mut x = self.base.clone();
        let mut trace = SynthesisTrace {
            inputs: Vec::with_capacity(self.blocks.len()),
            modulations: Vec::with_capacity(self.blocks.len()),
            preactivations: Vec::with_capacity(self.blocks.len()),
            image: Vec::new(),
        };
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 {
                x = upsample(&x, block.resolution / 2, c);
            }
            let style = stack.row(k);
            check_dim(block.style_affine.cols(), style.len())?;
            let mut modulation = block.style_affine.matvec(style)?;
            for (m, &b) in modulation.iter_mut().zip(&block.style_bias) {
                *m = *m + b;
            }
            let (scale, bias) = modulation.split_at(c);
            let mut pre = vec![T::zero(); x.len()];
            let mut y = vec![T::zero(); c];
            for (p, (xp, zp)) in x.chunks_exact(c).zip(pre.chunks_exact_mut(c)).enumerate() {
                for j in 0..c {
                    y[j] = xp[j] * scale[j] + bias[j];
                }
                let noise = &block.noise[p * c..(p + 1) * c];
                for (i, zi) in zp.iter_mut().enumerate() {
                    *zi = dot(block.mixing.row(i), &y) + noise[i];
                }
            }
            let out: Vec<T> = pre.iter().map(|&v| lru_scalar(v, slope)).collect();
            trace.inputs.push(x);
            trace.modulations.push(modulation);
            trace.preactivations.push(pre);
            x = out;
        }
        let mut image = Vec::with_capacity(self.shape.len());
        for xp in x.chunks_exact(c) {
            for ch in 0..3 {
                image.push(dot(self.to_rgb.row(ch), xp) + self.rgb_bias[ch]);
            }
        }
        trace.image = image;
        Ok(trace)
    }

    /// Reverse pass: gradient of `⟨cotangent, G(stack)⟩` with respect to every style entry.
    pub fn backward(&self, trace: &SynthesisTrace<T>, cotangent: &[T]) -> Result<Matrix<T>> {
        check_dim(self.shape.len(), cotangent.len())?;
        let c = self.channels;
        let slope = T::lit(SYNTHESIS_SLOPE);
        let d = self.blocks[0].style_affine.cols();
        let mut grad = Matrix::zeros(self.blocks.len(), d);

        let mut g_x: Vec<T> = Vec::with_capacity(cotangent.len() / 3 * c);
        for gp in cotangent.chunks_exact(3) {
            let start = g_x.len();
            g_x.resize(start + c, T::zero());
            for (ch, &g) in gp.iter().enumerate() {
                crate::scalar::axpy(g, self.to_rgb.row(ch), &mut g_x[start..]);
            }
        }

        for k in (0..self.blocks.len()).rev() {
            let block = &self.blocks[k];
            let input = &trace.inputs[k];
            let modulation = &trace.modulations[k];
            let pre = &trace.preactivations[k];
            let scale = &modulation[..c];
            let mut g_mod = vec![T::zero(); 2 * c];
            let mut g_in = vec![T::zero(); input.len()];
            let mut g_z = vec![T::zero(); c];
            let mut g_y = vec![T::zero(); c];
            for p in 0..input.len() / c {
                let range = p * c..(p + 1) * c;
                for (j, gz) in g_z.iter_mut().enumerate() {
                    *gz = g_x[p * c + j] * lru_derivative(pre[p * c + j], slope);
                }
                g_y.iter_mut().for_each(|v| *v = T::zero());
                for (i, &gz) in g_z.iter().enumerate() {
                    if gz != T::zero() {
                        crate::scalar::axpy(gz, block.mixing.row(i), &mut g_y);
                    }
                }
                let xp = &input[range.clone()];
                let gi = &mut g_in[range];
                for j in 0..c {
                    g_mod[j] = g_mod[j] + g_y[j] * xp[j];
                    g_mod[c + j] = g_mod[c + j] + g_y[j];
                    gi[j] = g_y[j] * scale[j];
                }
            }
            let g_style = block.style_affine.matvec_t(&g_mod)?;
            grad.row_mut(k).copy_from_slice(&g_style);
            if k > 0 {
                g_x = downsample_sum(&g_in, block.resolution / 2, c);
            }
        }
        Ok(grad)
    }
}

fn upsample<T: Scalar>(x: &[T], res: usize, c: usize) -> Vec<T> {
    let out_res = res * 2;
    let mut out = vec![T::zero(); out_res * out_res * c];
    for y in 0..out_res {
        for xx in 0..out_res {
            let src = ((y / 2) * res + xx / 2) * c;
            let dst = (y * out_res + xx) * c;
            out[dst..dst + c].copy_from_slice(&x[src..src + c]);
        }
    }
    out
}

/// Adjoint of [`upsample`]: sums each 2×2 block of children into its parent.
fn downsample_sum<T: Scalar>(g: &[T], res: usize, c: usize) -> Vec<T> {
    let out_res = res * 2;
    let mut out = vec![T::zero(); res * res * c];
    for y in 0..out_res {
        for xx in 0..out_res {
            let dst = ((y / 2) * res + xx / 2) * c;
            let src = (y * out_res + xx) * c;
            for j in 0..c {
                out[dst + j] = out[dst + j] + g[src + j];
            }
        }
    }
    out
}

/// Mapping and synthesis networks regenerated from `(seed, dims)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBundle<T> {
    seed: u64,
    dims: GeneratorDims,
    mapping: MappingNetwork<T>,
    synthesis: SynthesisNetwork<T>,
}

/// Persisted form of a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleFile {
    pub seed: u64,
    pub dims: GeneratorDims,
}

fn normal_vec<T: Scalar, R: Rng>(rng: &mut R, n: usize, std: f64) -> Vec<T> {
    (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            T::lit(x * std)
        })
        .collect()
}

fn he_matrix<T: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<T> {
    let std = (2.0 / cols as f64).sqrt();
    Matrix::from_vec(rows, cols, normal_vec(rng, rows * cols, std)).expect("rows×cols")
}

impl<T: Scalar> GeneratorBundle<T> {
    /// Draws all weights from one seeded stream; weights use `N(0, 2/fan_in)`.
    pub fn init(seed: u64, dims: GeneratorDims) -> Result<Self> {
        dims.validate()?;
        let mut rng = rng_for(seed, stream::GENERATOR_WEIGHTS, 0);
        let d = dims.latent_dim;
        let h = dims.hidden_width;
        let mut layers = Vec::with_capacity(dims.mapping_layers);
        for i in 0..dims.mapping_layers {
            let fan_in = if i == 0 { d } else { h };
            let fan_out = if i + 1 == dims.mapping_layers { d } else { h };
            let weight = he_matrix(&mut rng, fan_out, fan_in);
            let bias = normal_vec(&mut rng, fan_out, MAPPING_BIAS_STD);
            layers.push(Dense { weight, bias });
        }
        let mapping = MappingNetwork { layers };

        let c = dims.channels;
        let base = normal_vec(&mut rng, dims.base_resolution * dims.base_resolution * c, 1.0);
        let mut blocks = Vec::with_capacity(dims.scales);
        for k in 0..dims.scales {
            let res = dims.resolution(k);
            let style_affine = he_matrix(&mut rng, 2 * c, d);
            let mut style_bias = vec![T::zero(); 2 * c];
            style_bias[..c].iter_mut().for_each(|v| *v = T::one());
            let mixing = he_matrix(&mut rng, c, c);
            let noise = normal_vec(&mut rng, res * res * c, NOISE_STD);
            blocks.push(ScaleBlock {
                style_affine,
                style_bias,
                mixing,
                noise,
                resolution: res,
            });
        }
        let to_rgb = he_matrix(&mut rng, 3, c);
        let rgb_bias = vec![T::zero(); 3];
        let synthesis = SynthesisNetwork {
            channels: c,
            base,
            blocks,
            to_rgb,
            rgb_bias,
            shape: dims.image_shape(),
        };
        Ok(Self {
            seed,
            dims,
            mapping,
            synthesis,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dims(&self) -> GeneratorDims {
        self.dims
    }

    pub fn latent_dim(&self) -> usize {
        self.dims.latent_dim
    }

    pub fn scales(&self) -> usize {
        self.dims.scales
    }

    pub fn image_shape(&self) -> ImageShape {
        self.synthesis.shape
    }

    pub fn mapping(&self) -> &MappingNetwork<T> {
        &self.mapping
    }

    pub fn synthesis(&self) -> &SynthesisNetwork<T> {
        &self.synthesis
    }

    pub fn map_latent(&self, z: &[T]) -> Result<LatentW<T>> {
        check_dim(self.dims.latent_dim, z.len())?;
        if !all_finite(z) {
            return Err(Error::NonFinite("z".into()));
        }
        Ok(LatentW::from_vec_unchecked(self.mapping.forward(z)?))
    }

    pub fn synthesize(&self, stack: &StyleStack<T>) -> Result<Vec<T>> {
        check_dim(self.dims.latent_dim, stack.dim())?;
        self.synthesis.forward(stack)
    }

    /// The W-pathway: `G(w) = G(broadcast(w))`.
    pub fn synthesize_w(&self, w: &LatentW<T>) -> Result<Vec<T>> {
        self.synthesize(&broadcast_style(w, self.dims.scales))
    }

    pub fn synthesize_trace(&self, stack: &StyleStack<T>) -> Result<SynthesisTrace<T>> {
        check_dim(self.dims.latent_dim, stack.dim())?;
        self.synthesis.forward_trace(stack)
    }

    /// Vector-Jacobian product of [`Self::synthesize`] at `stack`.
    pub fn synthesize_vjp(&self, stack: &StyleStack<T>, cotangent: &[T]) -> Result<Matrix<T>> {
        check_dim(self.image_shape().len(), cotangent.len())?;
        let trace = self.synthesize_trace(stack)?;
        self.synthesis.backward(&trace, cotangent)
    }

    /// `n` styles `w_i = M(z_i)` with `z_i` drawn from `(seed, i)`.
    pub fn sample_styles(&self, seed: u64, n: usize) -> Matrix<T> {
        self.sample_styles_range(seed, 0, n)
    }

    /// Styles for indices `start..start + n`.
    pub fn sample_styles_range(&self, seed: u64, start: usize, n: usize) -> Matrix<T> {
        let d = self.dims.latent_dim;
        let rows: Vec<Vec<T>> = (start..start + n)
            .into_par_iter()
            .map(|i| {
                let z = sample_z_indexed(seed, i as u64, d);
                self.mapping.forward(&z).expect("z has latent dim")
            })
            .collect();
        let mut data = Vec::with_capacity(n * d);
        rows.into_iter().for_each(|r| data.extend(r));
        Matrix::from_vec(n, d, data).expect("n×d styles")
    }

    /// Images for each row of `styles` (W-pathway).
    pub fn synthesize_batch(&self, styles: &Matrix<T>) -> Result<Matrix<T>> {
        check_dim(self.dims.latent_dim, styles.cols())?;
        let images: Vec<Vec<T>> = (0..styles.rows())
            .into_par_iter()
            .map(|i| self.synthesize_w(&LatentW::from_vec_unchecked(styles.row(i).to_vec())))
            .collect::<Result<_>>()?;
        let n = images.len();
        let len = self.image_shape().len();
        Matrix::from_vec(n, len, images.into_iter().flatten().collect())
    }

    pub fn to_file(&self) -> BundleFile {
        BundleFile {
            seed: self.seed,
            dims: self.dims,
        }
    }

    pub fn from_file(file: BundleFile) -> Result<Self> {
        Self::init(file.seed, file.dims)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_file())?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: BundleFile = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_file(file).map_err(|e| Error::Format(e.to_string()))
    }
}

/// A standard normal vector normalized to unit length: uniform on the sphere.
pub fn sample_z<T: Scalar>(seed: u64, d: usize) -> Vec<T> {
    sample_z_indexed(seed, 0, d)
}

/// Latent `i` of the stream rooted at `seed`.
pub fn sample_z_indexed<T: Scalar>(seed: u64, index: u64, d: usize) -> Vec<T> {
    let mut rng = rng_for(seed, stream::LATENT_Z, index);
    loop {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return x.into_iter().map(|v| T::lit(v / norm)).collect();
        }
    }
}
