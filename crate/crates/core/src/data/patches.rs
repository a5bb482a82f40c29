//! Training patches for super-resolution and per-channel scaling.

use ndarray::{s, Array2};
use rand::Rng;

use super::{bicubic_resize, bicubic_resize_to, extract_features, ImageGray, FEATURE_CHANNELS};
use crate::error::{Error, Result};
use crate::multimodal::MultimodalSample;
use crate::rng::StreamRng;

/// A high-resolution image, its bicubic reconstruction from the
/// `factor`-times downscaled version, and the features of that
/// reconstruction.
#[derive(Debug, Clone)]
pub struct SrPair {
    pub hr: ImageGray,
    pub upscaled: ImageGray,
    pub features: [Array2<f64>; FEATURE_CHANNELS],
}

impl SrPair {
    /// Crops `hr` to a multiple of `factor` first.
    pub fn from_hr(hr: &ImageGray, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("magnification factor must be at least 1".into()));
        }
        let (rows, cols) = (hr.rows() / factor * factor, hr.cols() / factor * factor);
        let hr = hr.crop(rows, cols)?;
        let lr = bicubic_resize(&hr, 1.0 / factor as f64)?;
        let upscaled = bicubic_resize_to(&lr, rows, cols)?;
        let features = extract_features(&upscaled);
        Ok(Self { hr, upscaled, features })
    }

    fn patch(&self, r: usize, c: usize, p: usize) -> (MultimodalSample, Array2<f64>) {
        let cut = |m: &Array2<f64>| m.slice(s![r..r + p, c..c + p]).to_owned();
        let sample = MultimodalSample { x: cut(self.hr.pixels()), z: self.features.iter().map(cut).collect() };
        (sample, cut(self.upscaled.pixels()))
    }
}

/// Patches with their bicubic estimates and source positions
/// `(image, row, col)`.
#[derive(Debug, Clone, Default)]
pub struct PatchSet {
    pub samples: Vec<MultimodalSample>,
    pub bicubic: Vec<Array2<f64>>,
    pub coords: Vec<(usize, usize, usize)>,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Draws `n` square patches of side `patch` at uniform positions.
///
/// Each draw picks an image uniformly, then the top row, then the left
/// column. The high-resolution patch becomes `X`; the feature patches are
/// cut from the bicubic reconstruction at the same position.
pub fn sample_patches(corpus: &[SrPair], patch: usize, n: usize, rng: &mut StreamRng) -> Result<PatchSet> {
    if patch == 0 {
        return Err(Error::Config("patch size must be at least 1".into()));
    }
    if n > 0 && corpus.is_empty() {
        return Err(Error::Empty("patch corpus"));
    }
    for (i, pair) in corpus.iter().enumerate() {
        if pair.hr.rows() < patch || pair.hr.cols() < patch {
            return Err(Error::InvalidValue(format!(
                "image {i} is {}x{}, smaller than the {patch}x{patch} patch",
                pair.hr.rows(),
                pair.hr.cols()
            )));
        }
    }
    let mut set = PatchSet::default();
    for _ in 0..n {
        let i = rng.random_range(0..corpus.len());
        let pair = &corpus[i];
        let r = rng.random_range(0..=pair.hr.rows() - patch);
        let c = rng.random_range(0..=pair.hr.cols() - patch);
        let (sample, bicubic) = pair.patch(r, c, patch);
        set.samples.push(sample);
        set.bicubic.push(bicubic);
        set.coords.push((i, r, c));
    }
    Ok(set)
}

/// Affine map of each channel onto `[0, 1]`, clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScaling {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChannelScaling {
    pub fn identity(channels: usize) -> Self {
        Self { lo: vec![0.0; channels], hi: vec![1.0; channels] }
    }

    /// `[mean − spread·σ, mean + spread·σ]` per channel over all entries.
    /// Channels with no variation map onto `[mean, mean + 1]`.
    pub fn fit(samples: &[Vec<Array2<f64>>], spread: f64) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("scaling samples"))?;
        let mut lo = Vec::with_capacity(first.len());
        let mut hi = Vec::with_capacity(first.len());
        for ch in 0..first.len() {
            let (mut n, mut sum, mut sq) = (0.0, 0.0, 0.0);
            for s in samples {
                for &v in &s[ch] {
                    n += 1.0;
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / n;
            let sd = (sq / n - mean * mean).max(0.0).sqrt();
            if sd * spread > 1e-12 {
                lo.push(mean - spread * sd);
                hi.push(mean + spread * sd);
            } else {
                lo.push(mean);
                hi.push(mean + 1.0);
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn channels(&self) -> usize {
        self.lo.len()
    }

    pub fn apply(&self, channel: usize, m: &Array2<f64>) -> Array2<f64> {
        let (lo, span) = (self.lo[channel], self.hi[channel] - self.lo[channel]);
        m.mapv(|v| ((v - lo) / span).clamp(0.0, 1.0))
    }

    pub fn invert(&self, channel: usize, m: &Array2<f64>) -> Array2<f64> {
        let (lo, span) = (self.lo[channel], self.hi[channel] - self.lo[channel]);
        m.mapv(|v| lo + v * span)
    }
}
