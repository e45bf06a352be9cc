//! Restoration and compression of electron micrographs with denoising
//! autoencoders, fixed convolution kernels and small per-window MLPs.
//!
//! - [`tensor`] / [`preprocess`]: image containers and per-crop normalization.
//! - [`published`]: the shipped 3×3 to 11×11 kernels and the model inventory.
//! - [`models`]: kernel, MLP and autoencoder forward passes.
//! - [`training`]: losses, ADAM, schedules, batch-norm, gradients, training loop.
//! - [`distill`]: teacher–student fitting of kernels and MLPs.
//! - [`codec`]: latent-space compression container (`EMLC`).
//! - [`metrics`]: learning-curve smoothing and summaries.
//! - [`container`] / [`io`]: model files (`EMNN`) and image files.
//! - [`cli`]: the `emrestore` command-line front end.

mod bytes;
pub mod cli;
pub mod codec;
pub mod container;
pub mod distill;
pub mod error;
pub mod io;
pub mod metrics;
pub mod models;
pub mod preprocess;
pub mod published;
pub mod synthetic;
pub mod tensor;
pub mod training;

pub use error::{Error, FormatError, Result};
pub use models::{AutoencoderParams, AutoencoderPlan, Border, KernelModel, MlpModel, Mode};
pub use preprocess::{denormalize, normalize, NormStats};
pub use published::{get_kernel, inventory, Modality};
pub use tensor::{Image, Tensor3};
