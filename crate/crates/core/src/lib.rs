//! Matrix-variate restricted Boltzmann machines.
//!
//! Visible and hidden layers are binary matrices coupled through a bilinear
//! map `U X Vᵀ`, so a 28×28 image talks to a 15×15 hidden layer through
//! two small factor matrices instead of a 784×225 weight matrix.
//!
//! The crate is organised around the model life cycle:
//!
//! * [`model`]: parameters, energy, conditionals and the Gibbs kernel.
//! * [`oracle`]: exhaustive enumeration for tiny models (exact partition
//!   function, conditionals and log-likelihood gradient).
//! * [`trainer`]: contrastive divergence with momentum and weight decay.
//! * [`rbm`]: the classic vector RBM baseline sharing the same trainer.
//! * [`multimodal`]: several visible channels sharing one hidden matrix,
//!   plus the mean-field super-resolution inference.
//! * [`data`], [`eval`], [`persistence`], [`config`]: IO and metrics.
//! * [`pipelines`]: the denoising, classification and super-resolution
//!   experiments wired end to end.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod multimodal;
pub mod oracle;
pub mod persistence;
pub mod pipelines;
pub mod rbm;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{ActivationMatrix, BinaryMatrix, LayerShape, MvrbmParams};
pub use rng::{seeded, StreamRng};
pub use trainer::{EpochReport, GradientIncrement, TrainConfig};
