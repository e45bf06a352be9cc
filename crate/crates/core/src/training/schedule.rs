use crate::error::{Error, Result};

/// Quadratic step-down learning-rate schedule:
/// `eta = (1 − k / max_iter)² · eta0` with `k` the last multiple of
/// `step_every` not exceeding the iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub eta0: f64,
    pub max_iter: usize,
    pub step_every: usize,
}

impl Schedule {
    pub fn new(eta0: f64, max_iter: usize, step_every: usize) -> Result<Self> {
        if !(eta0 > 0.0) || !eta0.is_finite() {
            return Err(Error::Validation(format!("eta0 must be positive, got {eta0}")));
        }
        if max_iter == 0 || step_every == 0 {
            return Err(Error::Validation("max_iter and step_every must be positive".into()));
        }
        if step_every > max_iter {
            return Err(Error::Validation(format!(
                "step_every {step_every} exceeds max_iter {max_iter}"
            )));
        }
        Ok(Self {
            eta0,
            max_iter,
            step_every,
        })
    }

    /// Autoencoder policy: η₀ = 0.01 stepped down twelve times over the run
    /// (every 5000 iterations of a 60000-iteration run).
    pub fn autoencoder(max_iter: usize) -> Result<Self> {
        Self::new(0.01, max_iter, (max_iter / 12).max(1))
    }

    /// Kernel/MLP policy: η₀ = 0.01 stepped down after every iteration.
    pub fn per_iteration(max_iter: usize) -> Result<Self> {
        Self::new(0.01, max_iter, 1)
    }

    pub fn learning_rate(&self, iter: usize) -> Result<f64> {
        if iter >= self.max_iter {
            return Err(Error::Range(format!(
                "iteration {iter} outside 0..{}",
                self.max_iter
            )));
        }
        let k = self.step_every * (iter / self.step_every);
        let frac = 1.0 - k as f64 / self.max_iter as f64;
        Ok(frac * frac * self.eta0)
    }
}

pub fn learning_rate(s: &Schedule, iter: usize) -> Result<f64> {
    s.learning_rate(iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        let s = Schedule::new(0.01, 1000, 1).unwrap();
        assert_eq!(s.learning_rate(0).unwrap(), 0.01);
        assert!((s.learning_rate(500).unwrap() - 0.0025).abs() < 1e-12);
        let s = Schedule::new(0.01, 60000, 5000).unwrap();
        let want = (11.0f64 / 12.0).powi(2) * 0.01;
        assert!((s.learning_rate(7500).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.00840278).abs() < 1e-8);
        assert_eq!(Schedule::autoencoder(60000).unwrap().step_every, 5000);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = Schedule::per_iteration(10).unwrap();
        assert!(matches!(s.learning_rate(10), Err(Error::Range(_))));
        assert!(Schedule::new(0.0, 10, 1).is_err());
        assert!(Schedule::new(0.01, 10, 11).is_err());
    }

    proptest! {
        #[test]
        fn non_increasing(max_iter in 1usize..5000, step in 1usize..500) {
            let s = Schedule::new(0.01, max_iter, step.min(max_iter)).unwrap();
            prop_assert_eq!(s.learning_rate(0).unwrap(), 0.01);
            let mut prev = f64::INFINITY;
            for i in 0..max_iter.min(600) {
                let lr = s.learning_rate(i).unwrap();
                prop_assert!(lr <= prev && lr > 0.0);
                prev = lr;
            }
        }
    }
}
