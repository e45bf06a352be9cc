//! Parameter containers and forward passes for the three model families.

pub mod autoencoder;
pub(crate) mod conv;
pub mod kernel;
pub mod mlp;

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Image;

pub use autoencoder::{AutoencoderParams, AutoencoderPlan, ConvLayer, Layer};
pub use kernel::KernelModel;
pub use mlp::{HiddenLayer, MlpModel};

/// How sliding-window models treat the image border.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Border {
    /// Mirror-pad by `(w − 1) / 2` so the output has the input's size.
    Reflect,
    /// Only evaluate windows that fit; output shrinks by `w − 1`.
    Crop,
}

impl FromStr for Border {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflect" => Ok(Border::Reflect),
            "crop" => Ok(Border::Crop),
            other => Err(Error::Validation(format!(
                "unknown border mode {other:?} (expected reflect or crop)"
            ))),
        }
    }
}

/// Batch-norm behaviour of a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Normalize with batch statistics and update running statistics.
    Train,
    /// Normalize with running statistics only.
    Infer,
}

/// Gradients congruent to a model's parameter slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like<P: Parameters + ?Sized>(model: &P) -> Self {
        Gradients(model.params().iter().map(|p| vec![0.0; p.len()]).collect())
    }

    /// Adds `scale · other` element-wise.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flatten().copied()
    }
}

/// Ordered access to every trainable parameter tensor of a model.
pub trait Parameters {
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// Pads (reflect) or passes through the image so that every output pixel
/// has a full `w × w` window. Returns the working image and output size.
pub(crate) fn prepare_windows(img: &Image, w: usize, border: Border) -> Result<(Image, usize, usize)> {
    if img.height() < w || img.width() < w {
        return Err(Error::Size(format!(
            "image {}x{} is smaller than the {w}x{w} window",
            img.height(),
            img.width()
        )));
    }
    match border {
        Border::Crop => Ok((img.clone(), img.height() - w + 1, img.width() - w + 1)),
        Border::Reflect => {
            let padded = crate::tensor::pad_reflect(img, (w - 1) / 2)?;
            Ok((padded, img.height(), img.width()))
        }
    }
}

/// Copies the `w × w` window with top-left `(top, left)` into `patch`.
#[inline]
pub(crate) fn fill_patch(img: &Image, top: usize, left: usize, w: usize, patch: &mut [f64]) {
    for a in 0..w {
        patch[a * w..(a + 1) * w].copy_from_slice(&img.row(top + a)[left..left + w]);
    }
}
