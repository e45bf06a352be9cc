//! Autoencoder training loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::backward::autoencoder_gradients;
use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::models::{AutoencoderParams, AutoencoderPlan, Parameters};
use crate::preprocess::normalize_or_zeros;
use crate::synthetic::PoissonGaussian;
use crate::tensor::{crop, Image};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_iter: usize,
    pub bn_decay: f64,
    pub seed: u64,
    /// Corrupt inputs (targets stay clean). Off for the published policy,
    /// which reconstructs the raw noisy crops.
    pub noise: Option<PoissonGaussian>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_iter: 60000,
            bn_decay: 0.999,
            seed: 0,
            noise: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_iter == 0 {
            return Err(Error::Config("batch size and max_iter must be positive".into()));
        }
        if !(self.bn_decay > 0.0 && self.bn_decay < 1.0) {
            return Err(Error::Config(format!(
                "bn_decay must lie in (0, 1), got {}",
                self.bn_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedAutoencoder {
    pub params: AutoencoderParams,
    /// Batch MSE at every iteration, before that iteration's update.
    pub curve: Vec<f64>,
}

/// Draws `batch` random crops of side `size` from `images`, normalized.
/// Returns `(inputs, targets)`; inputs are noisy copies when `noise` is set.
pub(crate) fn sample_batch<R: Rng + ?Sized>(
    images: &[Image],
    size: usize,
    batch: usize,
    noise: Option<&PoissonGaussian>,
    rng: &mut R,
) -> Result<(Vec<Image>, Vec<Image>)> {
    let mut inputs = Vec::with_capacity(batch);
    let mut targets = Vec::with_capacity(batch);
    for _ in 0..batch {
        let img = &images[rng.random_range(0..images.len())];
        let top = rng.random_range(0..=img.height() - size);
        let left = rng.random_range(0..=img.width() - size);
        let (c, _) = normalize_or_zeros(&crop(img, top, left, size)?);
        let input = match noise {
            Some(n) => n.apply(&c, rng),
            None => c.clone(),
        };
        inputs.push(input);
        targets.push(c);
    }
    Ok((inputs, targets))
}

/// Trains a freshly initialized autoencoder to reconstruct normalized
/// random crops, minimizing the huberized MSE with ADAM.
pub fn train_autoencoder(
    config: &TrainConfig,
    schedule: &Schedule,
    plan: AutoencoderPlan,
    dataset: &[Image],
) -> Result<TrainedAutoencoder> {
    config.validate()?;
    plan.validate()?;
    if schedule.max_iter != config.max_iter {
        return Err(Error::Config(format!(
            "schedule max_iter {} differs from config max_iter {}",
            schedule.max_iter, config.max_iter
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let s = plan.crop_size;
    if let Some((i, img)) = dataset
        .iter()
        .enumerate()
        .find(|(_, img)| img.height() < s || img.width() < s)
    {
        return Err(Error::Size(format!(
            "ingestion: image {i} is {}x{}, smaller than the {s}x{s} crop",
            img.height(),
            img.width()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = AutoencoderParams::init(plan, &mut rng)?;
    let mut adam = AdamState::for_model(&params);
    let mut curve = Vec::with_capacity(config.max_iter);
    for iter in 0..config.max_iter {
        let lr = schedule.learning_rate(iter)?;
        let (inputs, targets) = sample_batch(dataset, s, config.batch_size, config.noise.as_ref(), &mut rng)?;
        let (loss, grads, tape) = autoencoder_gradients(&params, &inputs, &targets)?;
        params.commit_batch_stats(&tape, 0, config.bn_decay)?;
        adam.step(&mut params.params_mut(), &grads.0, lr)?;
        curve.push(loss.mse);
    }
    Ok(TrainedAutoencoder { params, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::gaussian_blobs;

    fn tiny() -> (AutoencoderPlan, Vec<Image>) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = AutoencoderPlan {
            crop_size: 16,
            channels: [2, 3, 4],
            latent_depth: 2,
        };
        let data = (0..3).map(|_| gaussian_blobs(24, 24, 3, &mut rng)).collect();
        (plan, data)
    }

    #[test]
    fn single_iteration() {
        let (plan, data) = tiny();
        let cfg = TrainConfig {
            batch_size: 4,
            max_iter: 1,
            ..TrainConfig::default()
        };
        let out = train_autoencoder(&cfg, &Schedule::autoencoder(1).unwrap(), plan, &data).unwrap();
        assert_eq!(out.curve.len(), 1);
        let fresh = AutoencoderParams::init(plan, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_ne!(out.params.params(), fresh.params());
    }

    #[test]
    fn deterministic() {
        let (plan, data) = tiny();
        let cfg = TrainConfig {
            batch_size: 2,
            max_iter: 5,
            seed: 9,
            ..TrainConfig::default()
        };
        let sched = Schedule::autoencoder(5).unwrap();
        let a = train_autoencoder(&cfg, &sched, plan, &data).unwrap();
        let b = train_autoencoder(&cfg, &sched, plan, &data).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn rejects_small_images() {
        let (plan, _) = tiny();
        let cfg = TrainConfig {
            max_iter: 1,
            ..TrainConfig::default()
        };
        let err = train_autoencoder(&cfg, &Schedule::autoencoder(1).unwrap(), plan, &[Image::zeros(8, 30)]).unwrap_err();
        assert!(matches!(err, Error::Size(ref m) if m.contains("ingestion")));
    }
}
