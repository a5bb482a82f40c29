//! End-to-end experiments built from the library pieces.
//!
//! Each pipeline is a plain function over in-memory data so the CLI and
//! the test suites drive exactly the same code.

mod classify;
mod denoise;
mod filters;
mod mnist;
mod superres;

pub use classify::{classify_features, classify_mvrbm, classify_raw, classify_rbm, paper_classification_rows};
pub use denoise::{denoise, DenoiseConfig, DenoiseOutcome};
pub use filters::{filter_grid, grid_dims};
pub use mnist::{load_mnist, mnist_inputs, select_training_set, MnistSplit};
pub use superres::{
    paper_superres_rows, super_resolve, train_superres, SrEncoding, SrModel, SrReport, SrTrainConfig, DEFAULT_CYCLES,
};
