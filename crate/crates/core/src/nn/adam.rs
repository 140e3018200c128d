use crate::error::{Error, Result};
use crate::tensor::Scalar;

/// Adam with bias correction. Moment buffers are created on the first step
/// and must keep the same shapes afterwards.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Default for AdamState<T> {
    fn default() -> Self {
        AdamState { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, first: Vec::new(), second: Vec::new() }
    }
}

impl<T: Scalar> AdamState<T> {
    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [(&mut [T], &[T])], lr: f64) -> Result<()> {
        if self.first.is_empty() {
            self.first = params.iter().map(|(p, _)| vec![T::zero(); p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len()
            || params.iter().zip(&self.first).any(|((p, g), m)| p.len() != m.len() || g.len() != p.len())
        {
            return Err(Error::ShapeMismatch("Adam buffers do not match the parameters".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let (lr, eps) = (T::of(lr), T::of(self.eps));
        for (((p, g), m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            for (((pv, &gv), mv), vv) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mv = b1 * *mv + (T::one() - b1) * gv;
                *vv = b2 * *vv + (T::one() - b2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
