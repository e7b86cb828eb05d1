#![allow(dead_code)]

use ganprior::latent::{lru_in_place, V_SLOPE};
use ganprior::{GaussianModel, GeneratorBundle, GeneratorDims, Matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// d = 8, image 8×8×3.
pub fn small_dims() -> GeneratorDims {
    GeneratorDims {
        latent_dim: 8,
        hidden_width: 64,
        mapping_layers: 2,
        scales: 3,
        channels: 4,
        base_resolution: 2,
    }
}

pub fn small_bundle(seed: u64) -> GeneratorBundle<f64> {
    GeneratorBundle::init(seed, small_dims()).unwrap()
}

pub fn fit_model(bundle: &GeneratorBundle<f64>, n: usize, seed: u64) -> GaussianModel<f64> {
    let w = bundle.sample_styles(seed, n);
    let mut v = w.clone();
    for r in 0..v.rows() {
        lru_in_place(v.row_mut(r), V_SLOPE);
    }
    GaussianModel::fit(&v, &w).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

pub fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Matrix<f64> {
    let a = Matrix::from_vec(d, d, normal_vec(rng, d * d)).unwrap();
    let mut s = a.matmul(&a.transpose()).unwrap();
    for i in 0..d {
        s[(i, i)] += 0.5;
    }
    s
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &Matrix<f64>) -> Matrix<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = m.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                a[r].iter_mut().zip(&pivot_row).for_each(|(v, &q)| *v -= f * q);
            }
        }
    }
    let rows: Vec<Vec<f64>> = a.into_iter().map(|r| r[n..].to_vec()).collect();
    Matrix::from_rows(&rows).unwrap()
}

pub fn quad_form(m: &Matrix<f64>, x: &[f64]) -> f64 {
    let y = m.matvec(x).unwrap();
    x.iter().zip(&y).map(|(a, b)| a * b).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// `‖a − b‖∞ / ‖b‖∞`
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
