//! Bias-corrected ADAM.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment buffers plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    step: u32,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    /// Updates the moments with `gradient` and returns the parameter delta
    /// `−lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, gradient: &[T], lr: f64, params: AdamParams) -> Result<Vec<T>> {
        check_dim(self.m.len(), gradient.len())?;
        self.step += 1;
        let b1 = T::lit(params.beta1);
        let b2 = T::lit(params.beta2);
        let eps = T::lit(params.epsilon);
        let lr = T::lit(lr);
        let t = self.step as i32;
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let mut delta = Vec::with_capacity(gradient.len());
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(gradient) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            delta.push(-lr * m_hat / (v_hat.sqrt() + eps));
        }
        Ok(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_gives_zero_delta() {
        let mut s = AdamState::<f64>::new(3);
        let d = s.step(&[0.0; 3], 0.1, AdamParams::default()).unwrap();
        assert_eq!(d, vec![0.0; 3]);
    }

    #[test]
    fn first_step_is_minus_lr_sign() {
        let mut s = AdamState::<f64>::new(2);
        let d = s.step(&[1.0, -3.0], 0.1, AdamParams::default()).unwrap();
        // m̂ = g, v̂ = g², so delta = −0.1 · g / (|g| + 1e-8)
        assert!((d[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((d[1] - 0.1 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_approaches_lr() {
        let mut s = AdamState::<f64>::new(1);
        let mut last = 0.0;
        for _ in 0..5000 {
            last = s.step(&[0.37], 0.05, AdamParams::default()).unwrap()[0];
        }
        assert!((last + 0.05).abs() < 1e-6);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::<f64>::new(2);
        assert!(s.step(&[1.0], 0.1, AdamParams::default()).is_err());
    }
}
