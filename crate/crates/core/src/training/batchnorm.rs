//! Per-channel batch normalization over `[rows, channels]` data with the
//! channel index varying fastest.

use crate::error::{Error, Result};
use crate::models::Mode;

/// Added to the variance inside the square root.
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    /// False until the first train-mode update (or explicit priming).
    pub ready: bool,
}

/// Values kept from a train-mode forward pass for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct BnCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub mode: Mode,
}

impl BatchNorm {
    /// Scale 1, offset 0; running statistics start at mean 0, variance 1
    /// but are not usable for inference until updated.
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            ready: false,
        }
    }

    /// Marks the current running statistics as valid for inference.
    pub fn prime(&mut self) {
        self.ready = true;
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Normalizes `xs` (`[rows, channels]`, channel fastest).
    ///
    /// Train mode uses the biased batch variance and folds the batch
    /// statistics into the running ones with weight `1 − decay`.
    pub fn forward(&mut self, xs: &[f64], mode: Mode, decay: f64) -> Result<Vec<f64>> {
        if mode == Mode::Train && !(0.0..1.0).contains(&decay) {
            return Err(Error::Validation(format!("decay {decay} outside [0, 1)")));
        }
        let (y, _, stats) = self.forward_cached(xs, mode)?;
        if let Some((mean, var)) = stats {
            self.update_running(&mean, &var, decay);
        }
        Ok(y)
    }

    /// `running = decay · running + (1 − decay) · batch`.
    pub fn update_running(&mut self, mean: &[f64], var: &[f64], decay: f64) {
        for k in 0..self.channels() {
            self.running_mean[k] = decay * self.running_mean[k] + (1.0 - decay) * mean[k];
            self.running_var[k] = decay * self.running_var[k] + (1.0 - decay) * var[k];
        }
        self.ready = true;
    }

    /// Forward pass without touching the running statistics; in train mode
    /// the batch mean and biased variance are returned for a later
    /// [`update_running`](Self::update_running).
    #[allow(clippy::type_complexity)]
    pub(crate) fn forward_cached(&self, xs: &[f64], mode: Mode) -> Result<(Vec<f64>, BnCache, Option<(Vec<f64>, Vec<f64>)>)> {
        let c = self.channels();
        if xs.len() % c != 0 {
            return Err(Error::Size(format!(
                "{} values do not divide into {c} channels",
                xs.len()
            )));
        }
        let rows = xs.len() / c;
        let (mean, inv_std, stats) = match mode {
            Mode::Train => {
                if rows == 0 {
                    return Err(Error::Size("train-mode batch-norm needs a non-empty batch".into()));
                }
                let mut mean = vec![0.0; c];
                for row in xs.chunks_exact(c) {
                    mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
                }
                mean.iter_mut().for_each(|m| *m /= rows as f64);
                let mut var = vec![0.0; c];
                for row in xs.chunks_exact(c) {
                    for k in 0..c {
                        let d = row[k] - mean[k];
                        var[k] += d * d;
                    }
                }
                var.iter_mut().for_each(|v| *v /= rows as f64);
                let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
                (mean.clone(), inv_std, Some((mean, var)))
            }
            Mode::Infer => {
                if !self.ready {
                    return Err(Error::State(
                        "batch-norm running statistics are uninitialized; train or prime first".into(),
                    ));
                }
                let inv_std: Vec<f64> = self
                    .running_var
                    .iter()
                    .map(|v| 1.0 / (v + BN_EPSILON).sqrt())
                    .collect();
                (self.running_mean.clone(), inv_std, None)
            }
        };
        let mut xhat = Vec::with_capacity(xs.len());
        let mut y = Vec::with_capacity(xs.len());
        for row in xs.chunks_exact(c) {
            for k in 0..c {
                let h = (row[k] - mean[k]) * inv_std[k];
                xhat.push(h);
                y.push(self.gamma[k] * h + self.beta[k]);
            }
        }
        Ok((y, BnCache { xhat, inv_std, mode }, stats))
    }

    /// Returns `dx` and accumulates `dgamma`, `dbeta`.
    pub(crate) fn backward(&self, dy: &[f64], cache: &BnCache, dgamma: &mut [f64], dbeta: &mut [f64]) -> Vec<f64> {
        let c = self.channels();
        let rows = dy.len() / c;
        let mut sum_dxhat = vec![0.0; c];
        let mut sum_dxhat_xhat = vec![0.0; c];
        for (dyr, xr) in dy.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
            for k in 0..c {
                dgamma[k] += dyr[k] * xr[k];
                dbeta[k] += dyr[k];
                let dxh = dyr[k] * self.gamma[k];
                sum_dxhat[k] += dxh;
                sum_dxhat_xhat[k] += dxh * xr[k];
            }
        }
        let mut dx = Vec::with_capacity(dy.len());
        match cache.mode {
            Mode::Train => {
                let m = rows as f64;
                for (dyr, xr) in dy.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
                    for k in 0..c {
                        let dxh = dyr[k] * self.gamma[k];
                        dx.push(cache.inv_std[k] / m * (m * dxh - sum_dxhat[k] - xr[k] * sum_dxhat_xhat[k]));
                    }
                }
            }
            Mode::Infer => {
                for dyr in dy.chunks_exact(c) {
                    for k in 0..c {
                        dx.push(dyr[k] * self.gamma[k] * cache.inv_std[k]);
                    }
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_normalizes() {
        let mut bn = BatchNorm::new(1);
        let y = bn.forward(&[1.0, 2.0, 3.0], Mode::Train, 0.999).unwrap();
        let mean = y.iter().sum::<f64>() / 3.0;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        // biased variance 2/3, so the output variance is (2/3)/(2/3 + eps)
        assert!((var - (2.0 / 3.0) / (2.0 / 3.0 + BN_EPSILON)).abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_scale_gives_offset() {
        let mut bn = BatchNorm::new(2);
        bn.gamma = vec![0.0, 0.0];
        bn.beta = vec![0.5, -1.0];
        let y = bn.forward(&[1.0, 7.0, 3.0, -2.0], Mode::Train, 0.9).unwrap();
        assert_eq!(y, vec![0.5, -1.0, 0.5, -1.0]);
    }

    #[test]
    fn running_mean_converges_geometrically() {
        let mut bn = BatchNorm::new(1);
        let batch = [4.0, 6.0];
        let decay: f64 = 0.9;
        for n in 1..=50 {
            bn.forward(&batch, Mode::Train, decay).unwrap();
            let expected_gap = 5.0 * decay.powi(n);
            assert!(((5.0 - bn.running_mean[0]) - expected_gap).abs() < 1e-12);
            // var of batch is 1, initial running var 1: no gap
            assert!((bn.running_var[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn infer_requires_ready() {
        let mut bn = BatchNorm::new(1);
        assert!(matches!(bn.forward(&[1.0], Mode::Infer, 0.9), Err(Error::State(_))));
        bn.prime();
        let y = bn.forward(&[2.0], Mode::Infer, 0.9).unwrap();
        assert!((y[0] - 2.0 / (1.0 + BN_EPSILON).sqrt()).abs() < 1e-15);
        assert!(bn.forward(&[], Mode::Train, 0.9).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let xs = [0.3, -1.2, 2.0, 0.7, 1.5, -0.4, 0.9, 0.1];
        let w = [0.5, -1.0, 2.0, 0.25, 1.0, 3.0, -0.7, 0.2];
        let mut bn = BatchNorm::new(2);
        bn.gamma = vec![1.3, 0.6];
        bn.beta = vec![0.2, -0.1];
        let loss = |bn: &BatchNorm, x: &[f64]| -> f64 {
            let mut b = bn.clone();
            let y = b.forward(x, Mode::Train, 0.5).unwrap();
            y.iter().zip(&w).map(|(a, b)| a * b * a).sum()
        };
        let (y, cache, _) = bn.forward_cached(&xs, Mode::Train).unwrap();
        let dy: Vec<f64> = y.iter().zip(&w).map(|(a, b)| 2.0 * a * b).collect();
        let (mut dg, mut db) = (vec![0.0; 2], vec![0.0; 2]);
        let dx = bn.backward(&dy, &cache, &mut dg, &mut db);
        let h = 1e-6;
        for i in 0..xs.len() {
            let mut p = xs;
            let mut m = xs;
            p[i] += h;
            m[i] -= h;
            let fd = (loss(&bn, &p) - loss(&bn, &m)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-6 * fd.abs().max(1.0), "{i}: {fd} vs {}", dx[i]);
        }
        for k in 0..2 {
            let mut p = bn.clone();
            p.gamma[k] += h;
            let mut m = bn.clone();
            m.gamma[k] -= h;
            let fd = (loss(&p, &xs) - loss(&m, &xs)) / (2.0 * h);
            assert!((fd - dg[k]).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }
}
