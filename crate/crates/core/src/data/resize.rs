//! Separable bicubic and nearest-neighbour resampling.

use ndarray::Array2;

use super::ImageGray;
use crate::error::{Error, Result};

const A: f64 = -0.5;

fn cubic(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Per output index: source taps and their weights. Downscaling stretches
/// the kernel by the inverse factor so it also low-passes.
fn weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = dst as f64 / src as f64;
    let stretch = if scale < 1.0 { 1.0 / scale } else { 1.0 };
    let radius = 2.0 * stretch;
    (0..dst)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let lo = (center - radius).floor() as isize;
            let hi = (center + radius).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = (lo..=hi)
                .filter_map(|j| {
                    let w = cubic((center - j as f64) / stretch);
                    (w != 0.0).then(|| (j.clamp(0, src as isize - 1) as usize, w))
                })
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            if total != 1.0 {
                taps.iter_mut().for_each(|t| t.1 /= total);
            }
            taps
        })
        .collect()
}

fn separable(
    img: &Array2<f64>,
    rows: usize,
    cols: usize,
    wr: &[Vec<(usize, f64)>],
    wc: &[Vec<(usize, f64)>],
) -> Array2<f64> {
    let horizontal: Array2<f64> =
        Array2::from_shape_fn((img.nrows(), cols), |(r, c)| wc[c].iter().map(|&(j, w)| w * img[[r, j]]).sum::<f64>());
    Array2::from_shape_fn((rows, cols), |(r, c)| wr[r].iter().map(|&(i, w)| w * horizontal[[i, c]]).sum())
}

fn target(img: &ImageGray, factor: f64) -> Result<(usize, usize)> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Config(format!("resize factor must be positive, got {factor}")));
    }
    Ok(((img.rows() as f64 * factor).round() as usize, (img.cols() as f64 * factor).round() as usize))
}

/// Bicubic resize to `round(rows·factor) × round(cols·factor)`.
pub fn bicubic_resize(img: &ImageGray, factor: f64) -> Result<ImageGray> {
    let (rows, cols) = target(img, factor)?;
    bicubic_resize_to(img, rows, cols)
}

/// Bicubic (a = −0.5) resize with replicated edges; output clamped to `[0, 1]`.
pub fn bicubic_resize_to(img: &ImageGray, rows: usize, cols: usize) -> Result<ImageGray> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!("degenerate resize target {rows}x{cols}")));
    }
    let wr = weights(img.rows(), rows);
    let wc = weights(img.cols(), cols);
    let out = separable(img.pixels(), rows, cols, &wr, &wc);
    Ok(ImageGray::from_clamped(out.mapv(|p| p.clamp(0.0, 1.0))))
}

pub fn nearest_resize(img: &ImageGray, factor: f64) -> Result<ImageGray> {
    let (rows, cols) = target(img, factor)?;
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!("degenerate resize target {rows}x{cols}")));
    }
    let pick = |i: usize, src: usize, dst: usize| (((i as f64 + 0.5) * src as f64 / dst as f64) as usize).min(src - 1);
    let p = img.pixels();
    Ok(ImageGray::from_clamped(Array2::from_shape_fn((rows, cols), |(r, c)| {
        p[[pick(r, img.rows(), rows), pick(c, img.cols(), cols)]]
    })))
}
