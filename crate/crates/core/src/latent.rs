//! Latent representations (W, V and the per-scale stack W⁺), the leaky-ReLU
//! maps between W and V, linear interpolation and the block prior over W⁺.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianModel;
use crate::linalg::Matrix;
use crate::scalar::{all_finite, Scalar};

/// Negative slope of the mapping network's final activation.
pub const W_SLOPE: f64 = 0.2;
/// Negative slope that undoes it, mapping W to V.
pub const V_SLOPE: f64 = 5.0;

/// Leaky ReLU: `x` for `x ≥ 0`, `slope · x` otherwise.
#[inline]
pub fn lru_scalar<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        x
    } else {
        slope * x
    }
}

/// Derivative of [`lru_scalar`]; the kink at zero takes the positive branch.
#[inline]
pub fn lru_derivative<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        slope
    }
}

pub fn lru<T: Scalar>(x: &[T], slope: T) -> Vec<T> {
    x.iter().map(|&v| lru_scalar(v, slope)).collect()
}

pub fn lru_in_place<T: Scalar>(x: &mut [T], slope: T) {
    for v in x {
        *v = lru_scalar(*v, slope);
    }
}

macro_rules! latent_vector {
    ($name:ident, $what:literal) => {
        #[doc = $what]
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name<T>(Vec<T>);

        impl<T: Scalar> $name<T> {
            /// Fails on non-finite entries.
            pub fn new(values: Vec<T>) -> Result<Self> {
                if !all_finite(&values) {
                    return Err(Error::NonFinite(stringify!($name).into()));
                }
                Ok(Self(values))
            }

            pub(crate) fn from_vec_unchecked(values: Vec<T>) -> Self {
                Self(values)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![T::zero(); dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[T] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<T> {
                self.0
            }
        }

        impl<T: Scalar> Lerp<T> for $name<T> {
            fn lerp(&self, other: &Self, t: T) -> Result<Self> {
                Ok(Self(lerp_slices(&self.0, &other.0, t)?))
            }
        }
    };
}

latent_vector!(LatentW, "A style `w` in the raw intermediate latent space W.");
latent_vector!(LatentV, "A latent `v = LRU₅(w)` in the Gaussianized space V.");

pub fn w_to_v<T: Scalar>(w: &LatentW<T>) -> LatentV<T> {
    LatentV(lru(&w.0, T::lit(V_SLOPE)))
}

pub fn v_to_w<T: Scalar>(v: &LatentV<T>) -> LatentW<T> {
    LatentW(lru(&v.0, T::lit(W_SLOPE)))
}

/// One style per synthesis scale: an `s × d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleStack<T> {
    styles: Matrix<T>,
}

impl<T: Scalar> StyleStack<T> {
    pub fn new(styles: Matrix<T>) -> Result<Self> {
        if styles.rows() == 0 {
            return Err(Error::InvalidArgument("style stack needs at least one scale".into()));
        }
        if !all_finite(styles.as_slice()) {
            return Err(Error::NonFinite("StyleStack".into()));
        }
        Ok(Self { styles })
    }

    pub fn from_rows(rows: &[LatentW<T>]) -> Result<Self> {
        let rows: Vec<Vec<T>> = rows.iter().map(|r| r.0.clone()).collect();
        Self::new(Matrix::from_rows(&rows)?)
    }

    pub(crate) fn from_matrix_unchecked(styles: Matrix<T>) -> Self {
        Self { styles }
    }

    pub fn scales(&self) -> usize {
        self.styles.rows()
    }

    pub fn dim(&self) -> usize {
        self.styles.cols()
    }

    pub fn row(&self, k: usize) -> &[T] {
        self.styles.row(k)
    }

    pub fn style(&self, k: usize) -> LatentW<T> {
        LatentW(self.styles.row(k).to_vec())
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.styles
    }

    pub fn as_slice(&self) -> &[T] {
        self.styles.as_slice()
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.styles
    }
}

impl<T: Scalar> Lerp<T> for StyleStack<T> {
    fn lerp(&self, other: &Self, t: T) -> Result<Self> {
        check_dim(self.scales(), other.scales())?;
        check_dim(self.dim(), other.dim())?;
        let data = lerp_slices(self.as_slice(), other.as_slice(), t)?;
        Ok(Self::from_matrix_unchecked(Matrix::from_vec(
            self.scales(),
            self.dim(),
            data,
        )?))
    }
}

/// `s` copies of `w`: the W-pathway into a multi-scale generator.
pub fn broadcast_style<T: Scalar>(w: &LatentW<T>, scales: usize) -> StyleStack<T> {
    let mut data = Vec::with_capacity(scales * w.dim());
    for _ in 0..scales {
        data.extend_from_slice(&w.0);
    }
    StyleStack::from_matrix_unchecked(
        Matrix::from_vec(scales, w.dim(), data).expect("s×d broadcast"),
    )
}

/// Linear interpolation `(1 − t) a + t b`.
pub trait Lerp<T>: Sized {
    fn lerp(&self, other: &Self, t: T) -> Result<Self>;
}

fn lerp_slices<T: Scalar>(a: &[T], b: &[T], t: T) -> Result<Vec<T>> {
    check_dim(a.len(), b.len())?;
    let s = T::one() - t;
    Ok(a.iter().zip(b).map(|(&x, &y)| s * x + t * y).collect())
}

/// Either kind of inversion target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Latent<T> {
    W(LatentW<T>),
    WPlus(StyleStack<T>),
}

impl<T: Scalar> Latent<T> {
    /// Stack fed to the generator; W latents are broadcast.
    pub fn to_stack(&self, scales: usize) -> Result<StyleStack<T>> {
        match self {
            Latent::W(w) => Ok(broadcast_style(w, scales)),
            Latent::WPlus(s) => {
                check_dim(scales, s.scales())?;
                Ok(s.clone())
            }
        }
    }

    pub fn as_slice(&self) -> &[T] {
        match self {
            Latent::W(w) => w.as_slice(),
            Latent::WPlus(s) => s.as_slice(),
        }
    }

    /// Rows as a matrix (one row for W).
    pub fn to_matrix(&self) -> Matrix<T> {
        match self {
            Latent::W(w) => Matrix::from_vec(1, w.dim(), w.0.clone()).expect("1×d"),
            Latent::WPlus(s) => s.matrix().clone(),
        }
    }
}

impl<T: Scalar> Lerp<T> for Latent<T> {
    fn lerp(&self, other: &Self, t: T) -> Result<Self> {
        match (self, other) {
            (Latent::W(a), Latent::W(b)) => Ok(Latent::W(a.lerp(b, t)?)),
            (Latent::WPlus(a), Latent::WPlus(b)) => Ok(Latent::WPlus(a.lerp(b, t)?)),
            _ => Err(Error::InvalidArgument("cannot interpolate W with W+".into())),
        }
    }
}

/// Prior energy of a single style, `(v − μ)ᵀ Σ⁻¹ (v − μ)` with `v = LRU₅(w)`,
/// and its gradient with respect to `w`.
pub fn prior_energy_w<T: Scalar>(model: &GaussianModel<T>, w: &[T]) -> Result<(T, Vec<T>)> {
    check_dim(model.dim(), w.len())?;
    let slope = T::lit(V_SLOPE);
    let v = lru(w, slope);
    let (e, mut g) = model.mahalanobis_sq_with_grad(&v)?;
    for (gi, &wi) in g.iter_mut().zip(w) {
        *gi = *gi * lru_derivative(wi, slope);
    }
    Ok((e, g))
}

/// Block-diagonal prior over W⁺ with covariance `I_s ⊗ Σ`: the sum of
/// per-row energies. The Kronecker matrix is never formed.
pub fn mahalanobis_sq_plus<T: Scalar>(model: &GaussianModel<T>, stack: &StyleStack<T>) -> Result<T> {
    check_dim(model.dim(), stack.dim())?;
    let mut total = T::zero();
    for k in 0..stack.scales() {
        let v = lru(stack.row(k), T::lit(V_SLOPE));
        total = total + model.mahalanobis_sq(&v)?;
    }
    Ok(total)
}

/// [`mahalanobis_sq_plus`] and its gradient with respect to every style entry.
pub fn prior_energy_plus<T: Scalar>(
    model: &GaussianModel<T>,
    stack: &StyleStack<T>,
) -> Result<(T, Matrix<T>)> {
    check_dim(model.dim(), stack.dim())?;
    let mut total = T::zero();
    let mut grad = Matrix::zeros(stack.scales(), stack.dim());
    for k in 0..stack.scales() {
        let (e, g) = prior_energy_w(model, stack.row(k))?;
        total = total + e;
        grad.row_mut(k).copy_from_slice(&g);
    }
    Ok((total, grad))
}
