//! Synthetic micrograph-like test data and a Poisson-Gaussian noise model.
//!
//! Used by tests, the desk-scale acceptance runs and the CLI `--noise`
//! option; the published models were trained on real micrographs.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::tensor::Image;

/// Shot noise at `dose` counts per unit intensity plus additive Gaussian
/// read noise of standard deviation `read_sigma` (intensity units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonGaussian {
    pub dose: f64,
    pub read_sigma: f64,
}

impl Default for PoissonGaussian {
    fn default() -> Self {
        Self {
            dose: 25.0,
            read_sigma: 0.05,
        }
    }
}

impl PoissonGaussian {
    pub fn apply<R: Rng + ?Sized>(&self, img: &Image, rng: &mut R) -> Image {
        let read = Normal::new(0.0, self.read_sigma.max(0.0)).expect("non-negative sigma");
        img.map(|v| {
            let lambda = v.max(0.0) * self.dose;
            let counts = if lambda > 0.0 {
                Poisson::new(lambda).expect("positive rate").sample(rng)
            } else {
                0.0
            };
            counts / self.dose + read.sample(rng)
        })
    }
}

/// Unit background with `blobs` random Gaussian spots.
pub fn gaussian_blobs<R: Rng + ?Sized>(height: usize, width: usize, blobs: usize, rng: &mut R) -> Image {
    let spots: Vec<(f64, f64, f64, f64)> = (0..blobs)
        .map(|_| {
            (
                rng.random_range(0.0..height as f64),
                rng.random_range(0.0..width as f64),
                rng.random_range(2.0..10.0),
                rng.random_range(0.5..3.0),
            )
        })
        .collect();
    Image::from_fn(height, width, |r, c| {
        1.0 + spots
            .iter()
            .map(|&(y, x, s, a)| {
                let d2 = (r as f64 - y).powi(2) + (c as f64 - x).powi(2);
                a * (-d2 / (2.0 * s * s)).exp()
            })
            .sum::<f64>()
    })
}

/// Gaussian blobs with Poisson-Gaussian noise.
pub fn noisy_blobs<R: Rng + ?Sized>(height: usize, width: usize, blobs: usize, noise: PoissonGaussian, rng: &mut R) -> Image {
    let clean = gaussian_blobs(height, width, blobs, rng);
    noise.apply(&clean, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_is_unbiased_and_seeded() {
        let noise = PoissonGaussian {
            dose: 50.0,
            read_sigma: 0.1,
        };
        let clean = Image::filled(64, 64, 2.0);
        let a = noise.apply(&clean, &mut ChaCha8Rng::seed_from_u64(1));
        let b = noise.apply(&clean, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert!((a.mean() - 2.0).abs() < 0.02);
        let var = a.data().iter().map(|v| (v - a.mean()).powi(2)).sum::<f64>() / a.len() as f64;
        // 2/50 shot + 0.01 read
        assert!((var - 0.05).abs() < 0.01, "{var}");
    }

    #[test]
    fn blobs_above_background() {
        let img = gaussian_blobs(32, 48, 5, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!((img.height(), img.width()), (32, 48));
        assert!(img.min() >= 1.0 && img.max() > 1.2);
    }
}
