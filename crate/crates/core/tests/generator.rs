mod common;

use common::*;
use ganprior::generator::sample_z;
use ganprior::latent::{broadcast_style, w_to_v};
use ganprior::{GeneratorBundle, GeneratorDims, LatentW, Matrix, StyleStack};

fn random_stack(seed: u64, s: usize, d: usize) -> StyleStack<f64> {
    let mut r = rng(seed);
    StyleStack::new(Matrix::from_vec(s, d, normal_vec(&mut r, s * d)).unwrap()).unwrap()
}

#[test]
fn zero_latent_regression_value() {
    // Recorded from the first build: default dims, seed 0.
    let g = GeneratorBundle::<f64>::init(0, GeneratorDims::default()).unwrap();
    let w = g.map_latent(&[0.0; 32]).unwrap();
    let expected = [
        1.78823018338867601e-1,
        -3.29461642004519068e-3,
        -2.87159934162167230e-2,
        1.23170464304703769e-1,
    ];
    for (a, b) in w.as_slice().iter().zip(expected) {
        assert!((a - b).abs() < 1e-15, "{a:e} vs {b:e}");
    }
    let sum: f64 = w.as_slice().iter().sum();
    assert!((sum - 2.76825151236998046).abs() < 1e-13, "{sum:e}");
    assert_eq!(g.map_latent(&[0.0; 32]).unwrap(), w);
}

#[test]
fn v_map_recovers_final_preactivation() {
    let g = small_bundle(4);
    assert_eq!(g.mapping().final_slope(), 0.2);
    for i in 0..50 {
        let z = sample_z::<f64>(i, 8);
        let w = g.map_latent(&z).unwrap();
        let pre = g.mapping().forward_preactivation(&z).unwrap();
        for (v, p) in w_to_v(&w).as_slice().iter().zip(&pre) {
            assert!((v - p).abs() <= 4.0 * f64::EPSILON * p.abs(), "{v} vs {p}");
        }
    }
}

#[test]
fn bundle_json_reload_regenerates_identical_weights() {
    let g = GeneratorBundle::<f64>::init(9, GeneratorDims::default()).unwrap();
    let mut buf = Vec::new();
    g.write_json(&mut buf).unwrap();
    let back = GeneratorBundle::<f64>::read_json(buf.as_slice()).unwrap();
    assert_eq!(back, g);
    assert_ne!(GeneratorBundle::<f64>::init(10, GeneratorDims::default()).unwrap(), g);
}

#[test]
fn broadcast_stack_is_the_w_pathway() {
    let g = small_bundle(1);
    let w = LatentW::new(normal_vec(&mut rng(2), 8)).unwrap();
    assert_eq!(g.synthesize(&broadcast_style(&w, 3)).unwrap(), g.synthesize_w(&w).unwrap());
}

#[test]
fn finest_scale_changes_the_image() {
    let g = small_bundle(1);
    let stack = random_stack(5, 3, 8);
    let base = g.synthesize(&stack).unwrap();
    let mut m = stack.matrix().clone();
    let mut r = rng(6);
    for (x, dx) in m.row_mut(2).iter_mut().zip(normal_vec(&mut r, 8)) {
        *x += dx;
    }
    let changed = g.synthesize(&StyleStack::new(m).unwrap()).unwrap();
    let diff = base.iter().zip(&changed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff > 1e-6, "max pixel change {diff:e}");
    assert_eq!(g.synthesize(&stack).unwrap(), base);
}

#[test]
fn vjp_is_zero_and_linear_in_the_cotangent() {
    let g = small_bundle(2);
    let stack = random_stack(7, 3, 8);
    let n = g.image_shape().len();
    let zero = g.synthesize_vjp(&stack, &vec![0.0; n]).unwrap();
    assert!(zero.as_slice().iter().all(|&v| v == 0.0));
    let mut r = rng(8);
    let a = normal_vec(&mut r, n);
    let b = normal_vec(&mut r, n);
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let ga = g.synthesize_vjp(&stack, &a).unwrap();
    let gb = g.synthesize_vjp(&stack, &b).unwrap();
    let gab = g.synthesize_vjp(&stack, &ab).unwrap();
    for ((x, y), z) in ga.as_slice().iter().zip(gb.as_slice()).zip(gab.as_slice()) {
        assert!((x + y - z).abs() <= 1e-10);
    }
}

#[test]
fn vjp_matches_central_differences() {
    let g = small_bundle(3);
    assert_eq!(g.image_shape().len(), 8 * 8 * 3);
    let h = 1e-6;
    let mut checked = 0;
    for seed in 0..10 {
        let stack = random_stack(100 + seed, 3, 8);
        if g.synthesize_trace(&stack).unwrap().kink_distance() < 1e-4 {
            continue;
        }
        let cot = normal_vec(&mut rng(200 + seed), 192);
        let grad = g.synthesize_vjp(&stack, &cot).unwrap();
        let f = |m: &Matrix<f64>| -> f64 {
            let img = g.synthesize(&StyleStack::new(m.clone()).unwrap()).unwrap();
            img.iter().zip(&cot).map(|(a, b)| a * b).sum()
        };
        let mut fd = vec![0.0; 24];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut plus = stack.matrix().clone();
            let mut minus = stack.matrix().clone();
            plus.as_mut_slice()[i] += h;
            minus.as_mut_slice()[i] -= h;
            *slot = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        for (i, (a, b)) in fd.iter().zip(grad.as_slice()).enumerate() {
            assert!(rel_err(*a, *b) <= 1e-4 || (a - b).abs() <= 1e-8, "coord {i}: fd {a:e} vjp {b:e}");
        }
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} probe stacks away from kinks");
}

#[test]
fn batch_generation_matches_single_calls() {
    let g = small_bundle(5);
    let styles = g.sample_styles(3, 6);
    let images = g.synthesize_batch(&styles).unwrap();
    for i in 0..6 {
        let w = LatentW::new(styles.row(i).to_vec()).unwrap();
        assert_eq!(images.row(i), g.synthesize_w(&w).unwrap().as_slice());
    }
    assert_eq!(g.sample_styles_range(3, 2, 3).as_slice(), &styles.as_slice()[16..40]);
}

#[test]
fn sampled_z_has_near_zero_mean() {
    let n = 50_000;
    let mut mean = [0.0f64; 8];
    for i in 0..n {
        let z = ganprior::generator::sample_z_indexed::<f64>(17, i, 8);
        let norm: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        mean.iter_mut().zip(&z).for_each(|(m, x)| *m += x / n as f64);
    }
    assert!(mean.iter().all(|m| m.abs() < 0.02), "{mean:?}");
}
