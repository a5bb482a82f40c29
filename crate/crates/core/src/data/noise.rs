//! Binarisation and impulse noise.

use rand::seq::index;
use rand::Rng;

use super::ImageGray;
use crate::error::{Error, Result};
use crate::model::{bernoulli_array, BinaryMatrix};
use crate::rng::StreamRng;

/// 1 where the pixel exceeds `threshold`.
pub fn binarize(img: &ImageGray, threshold: f64) -> Result<BinaryMatrix> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("binarisation threshold {threshold} outside [0, 1]")));
    }
    BinaryMatrix::new(img.pixels().mapv(|p| f64::from(u8::from(p > threshold))))
}

/// Each pixel becomes an independent Bernoulli draw with its intensity as
/// probability; one uniform per pixel, row-major.
pub fn binarize_stochastic(img: &ImageGray, rng: &mut StreamRng) -> BinaryMatrix {
    BinaryMatrix::new(bernoulli_array(img.pixels(), rng)).expect("Bernoulli draws are binary")
}

/// Rewrites exactly `round(fraction · pixels)` distinct pixels, each to 0
/// or 1 with equal probability.
///
/// Draw order: the pixel subset first, then one coin per selected pixel in
/// selection order.
pub fn salt_pepper(img: &ImageGray, fraction: f64, rng: &mut StreamRng) -> Result<ImageGray> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("noise fraction {fraction} outside [0, 1]")));
    }
    let n = img.rows() * img.cols();
    let count = (fraction * n as f64).round() as usize;
    let mut px = img.pixels().clone();
    let cols = img.cols();
    for i in index::sample(rng, n, count) {
        px[[i / cols, i % cols]] = if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 };
    }
    Ok(ImageGray::from_clamped(px))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Matrix;
    use crate::rng::seeded;
    use ndarray::Array2;

    #[test]
    fn thresholding() {
        assert!(binarize(&ImageGray::filled(3, 3, 0.0).unwrap(), 0.5).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(binarize(&ImageGray::filled(3, 3, 1.0).unwrap(), 0.5).unwrap().values().iter().all(|&v| v == 1.0));
        let checker =
            ImageGray::new(Array2::from_shape_fn((4, 4), |(r, c)| if (r + c) % 2 == 0 { 0.2 } else { 0.8 })).unwrap();
        let b = binarize(&checker, 0.5).unwrap();
        assert!(b.values().indexed_iter().all(|((r, c), &v)| v == ((r + c) % 2) as f64));
        assert!(binarize(&checker, 1.5).is_err());
    }

    #[test]
    fn noise_touches_the_rounded_count() {
        let img = ImageGray::filled(28, 28, 0.5).unwrap();
        let noisy = salt_pepper(&img, 0.1, &mut seeded(1)).unwrap();
        assert_eq!(noisy.pixels().iter().filter(|&&p| p != 0.5).count(), 78);
        assert_eq!(salt_pepper(&img, 0.0, &mut seeded(1)).unwrap(), img);
        let all = salt_pepper(&img, 1.0, &mut seeded(1)).unwrap();
        assert!(all.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        assert!(salt_pepper(&img, 1.1, &mut seeded(1)).is_err());
    }

    #[test]
    fn stochastic_binarisation_follows_intensity() {
        let img = ImageGray::filled(50, 50, 0.3).unwrap();
        let b = binarize_stochastic(&img, &mut seeded(9));
        let mean = b.values().mean().unwrap();
        assert!((mean - 0.3).abs() < 0.03, "{mean}");
    }
}
