use std::path::Path;

use ndarray::Array2;

use crate::data::{binarize, load_idx, LabeledDataset};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

/// Loads one split from a directory holding the four standard MNIST files.
pub fn load_mnist(dir: impl AsRef<Path>, split: MnistSplit) -> Result<LabeledDataset> {
    let prefix = match split {
        MnistSplit::Train => "train",
        MnistSplit::Test => "t10k",
    };
    let dir = dir.as_ref();
    load_idx(dir.join(format!("{prefix}-images-idx3-ubyte")), dir.join(format!("{prefix}-labels-idx1-ubyte")))
}

/// The first `n` images (of class `digit` when given), in file order.
pub fn select_training_set(data: &LabeledDataset, n: usize, digit: Option<u8>) -> LabeledDataset {
    match digit {
        Some(d) => data.of_class(d).truncated(n),
        None => data.truncated(n),
    }
}

/// Visible matrices for an MVRBM: thresholded images, or raw intensities
/// when `threshold` is `None`.
pub fn mnist_inputs(data: &LabeledDataset, threshold: Option<f64>) -> Result<Vec<Array2<f64>>> {
    data.images
        .iter()
        .map(|img| match threshold {
            Some(t) => Ok(binarize(img, t)?.into_inner()),
            None => Ok(img.pixels().clone()),
        })
        .collect()
}
