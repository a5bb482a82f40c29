//! Images, datasets and the transforms that prepare them for training.

mod color;
mod features;
mod idx;
mod manifest;
mod noise;
mod patches;
mod pnm;
mod resize;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use color::{ycbcr_merge, ycbcr_split, RgbImage};
pub use features::{extract_features, FEATURE_CHANNELS};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels};
pub use manifest::read_manifest;
pub use noise::{binarize, binarize_stochastic, salt_pepper};
pub use patches::{sample_patches, ChannelScaling, PatchSet, SrPair};
pub use pnm::{read_pnm, read_pnm_file, write_pgm, write_pgm_file, write_ppm, Pnm};
pub use resize::{bicubic_resize, bicubic_resize_to, nearest_resize};

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray(Array2<f64>);

impl ImageGray {
    /// Clamps every pixel into `[0, 1]`. Rejects empty images and NaN.
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::Empty("image"));
        }
        if pixels.iter().any(|p| p.is_nan()) {
            return Err(Error::InvalidValue("image contains NaN".into()));
        }
        Ok(Self(pixels.mapv(|p| p.clamp(0.0, 1.0))))
    }

    pub(crate) fn from_clamped(pixels: Array2<f64>) -> Self {
        Self(pixels)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(Array2::from_elem((rows, cols), value))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.t().to_owned())
    }

    /// Top-left crop to `rows × cols`.
    pub fn crop(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > self.rows() || cols > self.cols() {
            return Err(Error::InvalidValue(format!(
                "cannot crop {}x{} image to {rows}x{cols}",
                self.rows(),
                self.cols()
            )));
        }
        Ok(Self(self.0.slice(ndarray::s![..rows, ..cols]).to_owned()))
    }
}

/// Images with integer class labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub images: Vec<ImageGray>,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(images: Vec<ImageGray>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Format(format!("{} images but {} labels", images.len(), labels.len())));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// The first `n` samples (or all of them).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self { images: self.images[..n].to_vec(), labels: self.labels[..n].to_vec() }
    }

    /// The samples with label `class`, in file order.
    pub fn of_class(&self, class: u8) -> Self {
        let (images, labels) =
            self.images.iter().zip(&self.labels).filter(|(_, &l)| l == class).map(|(i, &l)| (i.clone(), l)).unzip();
        Self { images, labels }
    }
}
