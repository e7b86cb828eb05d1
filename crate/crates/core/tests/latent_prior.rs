mod common;

use common::*;
use ganprior::latent::{broadcast_style, lru, mahalanobis_sq_plus, prior_energy_plus, V_SLOPE};
use ganprior::{GaussianModel, LatentW, Matrix, StyleStack};

/// Explicit `I_s ⊗ (Σ + εI)` Mahalanobis over the stacked V vector.
fn kronecker_energy(model: &GaussianModel<f64>, stack: &StyleStack<f64>) -> f64 {
    let (s, d) = (stack.scales(), stack.dim());
    let mut big = Matrix::zeros(s * d, s * d);
    for k in 0..s {
        for i in 0..d {
            for j in 0..d {
                let reg = if i == j { model.epsilon() } else { 0.0 };
                big[(k * d + i, k * d + j)] = model.cov_v()[(i, j)] + reg;
            }
        }
    }
    let inv = gauss_jordan_inverse(&big);
    let mut diff = Vec::with_capacity(s * d);
    for k in 0..s {
        let v = lru(stack.row(k), V_SLOPE);
        diff.extend(v.iter().zip(model.mean_v()).map(|(a, m)| a - m));
    }
    quad_form(&inv, &diff)
}

#[test]
fn block_prior_matches_kronecker_form() {
    let mut r = rng(21);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cov = random_spd(&mut r, 3);
        let mean = normal_vec(&mut r, 3);
        let model = GaussianModel::from_moments(mean, cov, None, 10).unwrap();
        let stack = StyleStack::new(Matrix::from_vec(2, 3, normal_vec(&mut r, 6)).unwrap()).unwrap();
        let fast = mahalanobis_sq_plus(&model, &stack).unwrap();
        worst = worst.max(rel_err(fast, kronecker_energy(&model, &stack)));
    }
    assert!(worst <= 1e-10, "worst relative error {worst:e}");
}

#[test]
fn identical_rows_double_the_single_energy() {
    let mut r = rng(3);
    let model = GaussianModel::from_moments(normal_vec(&mut r, 4), random_spd(&mut r, 4), None, 10).unwrap();
    let w = LatentW::new(normal_vec(&mut r, 4)).unwrap();
    let single = mahalanobis_sq_plus(&model, &broadcast_style(&w, 1)).unwrap();
    let double = mahalanobis_sq_plus(&model, &broadcast_style(&w, 2)).unwrap();
    assert_eq!(double, 2.0 * single);
    let (e, g) = prior_energy_plus(&model, &broadcast_style(&w, 2)).unwrap();
    assert_eq!(e, double);
    assert_eq!(g.row(0), g.row(1));
}
