use rand::Rng;

use super::{prepare_windows, Border, Parameters};
use crate::error::{Error, Result};
use crate::published::PublishedKernel;
use crate::tensor::Image;
use crate::training::init::xavier_init;

/// A single `w × w` linear filter.
///
/// The elementwise input weighting followed by a dense connection to one
/// output node collapses to one matrix, which is what is stored and trained.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    size: usize,
    weights: Vec<f64>,
}

impl KernelModel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        validate_size(size)?;
        if weights.len() != size * size {
            return Err(Error::Size(format!(
                "kernel of size {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Validation("kernel weights must be finite".into()));
        }
        Ok(Self { size, weights })
    }

    pub fn from_published(k: &PublishedKernel) -> Self {
        Self {
            size: k.size,
            weights: k.weights.to_vec(),
        }
    }

    /// Center weight 1, all others 0.
    pub fn identity(size: usize) -> Result<Self> {
        validate_size(size)?;
        let mut weights = vec![0.0; size * size];
        weights[size * size / 2] = 1.0;
        Ok(Self { size, weights })
    }

    /// Normalized Gaussian of standard deviation `sigma` on a `size × size` support.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        validate_size(size)?;
        if !(sigma > 0.0) {
            return Err(Error::Validation(format!("sigma must be positive, got {sigma}")));
        }
        let r = (size / 2) as f64;
        let mut weights: Vec<f64> = (0..size * size)
            .map(|i| {
                let dy = (i / size) as f64 - r;
                let dx = (i % size) as f64 - r;
                (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { size, weights })
    }

    /// Xavier-uniform weights with `fan_in = w²`, `fan_out = 1`.
    pub fn xavier<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Self> {
        validate_size(size)?;
        let weights = xavier_init(size * size, 1, size * size, rng)?;
        Ok(Self { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Dot product of the weights with the window centered on every pixel.
    pub fn apply(&self, img: &Image, border: Border) -> Result<Image> {
        let w = self.size;
        let (src, out_h, out_w) = prepare_windows(img, w, border)?;
        let mut out = Vec::with_capacity(out_h * out_w);
        for r in 0..out_h {
            for c in 0..out_w {
                let mut acc = 0.0;
                for a in 0..w {
                    let row = &src.row(r + a)[c..c + w];
                    let krow = &self.weights[a * w..(a + 1) * w];
                    acc += row.iter().zip(krow).map(|(x, k)| x * k).sum::<f64>();
                }
                out.push(acc);
            }
        }
        Image::new(out_h, out_w, out)
    }
}

impl Parameters for KernelModel {
    fn params(&self) -> Vec<&[f64]> {
        vec![&self.weights]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.weights]
    }
}

/// Free-function form of [`KernelModel::apply`].
pub fn kernel_apply(model: &KernelModel, img: &Image, border: Border) -> Result<Image> {
    model.apply(img, border)
}

pub(crate) fn validate_size(size: usize) -> Result<()> {
    if size < 3 || size % 2 == 0 {
        return Err(Error::Validation(format!(
            "window size must be odd and at least 3, got {size}"
        )));
    }
    Ok(())
}
