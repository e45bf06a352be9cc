use crate::error::{Error, Result};
use crate::models::{Gradients, Parameters};

/// First- and second-moment accumulators for bias-corrected ADAM.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zero moments shaped like `shapes`, default hyperparameters
    /// (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
    pub fn new(shapes: &[usize]) -> Self {
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_model<P: Parameters + ?Sized>(model: &P) -> Self {
        let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
        Self::new(&shapes)
    }

    /// One update of every slice in `params` with the matching gradients.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Size(format!(
                "expected {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::Size(format!(
                    "tensor {i}: state has {} entries, params {}, grads {}",
                    self.m[i].len(),
                    p.len(),
                    g.len()
                )));
            }
        }
        if !(lr > 0.0) {
            return Err(Error::Validation(format!("learning rate must be positive, got {lr}")));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(&mut self.v)) {
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Applies one ADAM update to a model.
pub fn adam_step<P: Parameters + ?Sized>(model: &mut P, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    let mut params = model.params_mut();
    state.step(&mut params, &grads.0, lr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = AdamState::new(&[1]);
        let mut p = [0.0];
        s.step(&mut [&mut p[..]], &[vec![1.0]], 0.01).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_grad_is_noop() {
        let mut s = AdamState::new(&[3]);
        s.m[0] = vec![0.0; 3];
        let mut p = [1.0, -2.0, 3.0];
        for _ in 0..4 {
            s.step(&mut [&mut p[..]], &[vec![0.0; 3]], 0.1).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 3.0]);
        assert_eq!(s.t, 4);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(&[2]);
        let mut p = [0.0; 3];
        assert!(matches!(
            s.step(&mut [&mut p[..]], &[vec![0.0; 3]], 0.1),
            Err(Error::Size(_))
        ));
    }
}
