//! Losses, initialization, optimizer, schedules, batch normalization,
//! gradients and the autoencoder training loop.

pub mod adam;
pub mod backward;
pub mod batchnorm;
pub mod init;
pub mod loss;
pub mod schedule;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, ModelRef};
pub use batchnorm::BatchNorm;
pub use init::xavier_init;
pub use loss::{huber_mse_loss, HuberMse};
pub use schedule::{learning_rate, Schedule};
pub use train::{train_autoencoder, TrainConfig, TrainedAutoencoder};
