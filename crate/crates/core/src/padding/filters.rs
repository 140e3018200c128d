use rand::Rng;

use crate::error::{Error, Result};
use crate::padding::bundle::{self, BorderBundle, PredictorBundle};
use crate::tensor::Scalar;

/// Whether the module learns from its own borders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Train,
    /// Frozen: forward passes build no supervision and backward never updates.
    Eval,
}

/// Optimizer used for the filters' private loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalOptimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for LocalOptimizer {
    fn default() -> Self {
        LocalOptimizer::Sgd { lr: 0.01 }
    }
}

impl LocalOptimizer {
    pub fn adam(lr: f64) -> Self {
        LocalOptimizer::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            LocalOptimizer::Sgd { lr } | LocalOptimizer::Adam { lr, .. } => lr,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Moments<T> {
    m: [T; 3],
    v: [T; 3],
}

/// One 1x3 filter per channel together with the local optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank<T> {
    weights: Vec<[T; 3]>,
    optimizer: LocalOptimizer,
    moments: Vec<Moments<T>>,
    steps: u64,
    mode: Mode,
}

impl<T: Scalar> FilterBank<T> {
    /// Every channel starts as the local mean `(1/3, 1/3, 1/3)`.
    pub fn mean(channels: usize) -> Result<Self> {
        let third = T::one() / T::of(3.0);
        Self::from_weights(vec![[third; 3]; channels])
    }

    /// Weights drawn uniformly from `[-half_width, half_width]`.
    pub fn uniform<R: Rng>(channels: usize, half_width: f64, rng: &mut R) -> Result<Self> {
        let weights = (0..channels)
            .map(|_| [(); 3].map(|_| T::of(rng.gen_range(-half_width..=half_width))))
            .collect();
        Self::from_weights(weights)
    }

    pub fn from_weights(weights: Vec<[T; 3]>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("a filter bank needs at least one channel".into()));
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("filter weights"));
        }
        let moments = vec![Moments::default(); weights.len()];
        Ok(FilterBank { weights, optimizer: LocalOptimizer::default(), moments, steps: 0, mode: Mode::Train })
    }

    pub fn with_optimizer(mut self, optimizer: LocalOptimizer) -> Self {
        self.optimizer = optimizer;
        self
    }

    pub fn optimizer(&self) -> LocalOptimizer {
        self.optimizer
    }

    pub fn channels(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[[T; 3]] {
        &self.weights
    }

    pub fn theta(&self, channel: usize) -> Result<[T; 3]> {
        self.weights
            .get(channel)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: channel, len: self.weights.len() })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Predicted padding rows for `channel`.
    pub fn predict(&self, p: &PredictorBundle<T>, channel: usize) -> Result<BorderBundle<T>> {
        Ok(bundle::predict_with(self.theta(channel)?, p))
    }

    pub fn local_mse(&self, p: &PredictorBundle<T>, t: &BorderBundle<T>, channel: usize) -> Result<T> {
        bundle::mse(self.theta(channel)?, p, t)
    }

    pub fn local_mse_grad(&self, p: &PredictorBundle<T>, t: &BorderBundle<T>, channel: usize) -> Result<[T; 3]> {
        bundle::mse_grad(self.theta(channel)?, p, t)
    }

    /// Applies one optimizer step with a gradient per channel.
    pub fn step(&mut self, grads: &[[T; 3]]) -> Result<()> {
        if grads.len() != self.weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} filter gradients for {} channels",
                grads.len(),
                self.weights.len()
            )));
        }
        self.steps += 1;
        let mut next = self.weights.clone();
        match self.optimizer {
            LocalOptimizer::Sgd { lr } => {
                let lr = T::of(lr);
                for (w, g) in next.iter_mut().zip(grads) {
                    for k in 0..3 {
                        w[k] -= lr * g[k];
                    }
                }
            }
            LocalOptimizer::Adam { lr, beta1, beta2, eps } => {
                let t = self.steps as i32;
                let (b1, b2) = (T::of(beta1), T::of(beta2));
                let c1 = T::one() - b1.powi(t);
                let c2 = T::one() - b2.powi(t);
                let (lr, eps) = (T::of(lr), T::of(eps));
                for ((w, g), mom) in next.iter_mut().zip(grads).zip(&mut self.moments) {
                    for k in 0..3 {
                        mom.m[k] = b1 * mom.m[k] + (T::one() - b1) * g[k];
                        mom.v[k] = b2 * mom.v[k] + (T::one() - b2) * g[k] * g[k];
                        let m_hat = mom.m[k] / c1;
                        let v_hat = mom.v[k] / c2;
                        w[k] -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        if next.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("filter update"));
        }
        self.weights = next;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut bank = FilterBank::<f64>::mean(2).unwrap();
        let before = bank.weights().to_vec();
        bank.step(&[[0.0; 3]; 2]).unwrap();
        assert_eq!(bank.weights(), &before[..]);

        let mut adam = FilterBank::<f64>::mean(1).unwrap().with_optimizer(LocalOptimizer::adam(1e-2));
        adam.step(&[[0.0; 3]]).unwrap();
        assert_eq!(adam.weights()[0], [1.0 / 3.0; 3]);
    }

    #[test]
    fn sgd_step() {
        let mut bank = FilterBank::from_weights(vec![[0.5f64, 0.25, -0.5]]).unwrap();
        bank.step(&[[1.0, -2.0, 0.5]]).unwrap();
        assert_eq!(bank.weights()[0], [0.5 - 0.01, 0.25 + 0.02, -0.5 - 0.005]);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut bank = FilterBank::from_weights(vec![[0.0f64; 3]]).unwrap().with_optimizer(LocalOptimizer::adam(1e-3));
        bank.step(&[[1.0, -4.0, 0.0]]).unwrap();
        let w = bank.weights()[0];
        assert!((w[0] + 1e-3).abs() < 1e-9);
        assert!((w[1] - 1e-3).abs() < 1e-9);
        assert_eq!(w[2], 0.0);
    }

    #[test]
    fn uniform_init_is_seeded_and_bounded() {
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x = FilterBank::<f32>::uniform(16, 0.1, &mut a).unwrap();
        let y = FilterBank::<f32>::uniform(16, 0.1, &mut b).unwrap();
        assert_eq!(x, y);
        assert!(x.weights().iter().flatten().all(|w| w.abs() <= 0.1));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FilterBank::<f64>::from_weights(vec![]).is_err());
        assert!(FilterBank::from_weights(vec![[f64::NAN, 0.0, 0.0]]).is_err());
        let mut bank = FilterBank::<f64>::mean(3).unwrap();
        assert!(bank.step(&[[0.0; 3]]).is_err());
        assert!(bank.theta(3).is_err());
        let mut huge = FilterBank::from_weights(vec![[0.0f64; 3]]).unwrap().with_optimizer(LocalOptimizer::Sgd { lr: 1e300 });
        assert!(matches!(huge.step(&[[1e300, 0.0, 0.0]]), Err(Error::NonFinite(_))));
    }
}
