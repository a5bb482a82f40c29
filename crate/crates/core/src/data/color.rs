//! RGB images and the BT.601 full-range YCbCr transform.

use ndarray::{Array2, Zip};

use super::ImageGray;
use crate::error::{Error, Result};

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    r: Array2<f64>,
    g: Array2<f64>,
    b: Array2<f64>,
}

impl RgbImage {
    /// Planes must share a nonempty shape; values are clamped to `[0, 1]`.
    pub fn new(r: Array2<f64>, g: Array2<f64>, b: Array2<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::Empty("image"));
        }
        for (name, p) in [("green plane", &g), ("blue plane", &b)] {
            if p.dim() != r.dim() {
                return Err(Error::dims(name, r.dim(), p.dim()));
            }
        }
        let clamp = |p: Array2<f64>| p.mapv(|x| x.clamp(0.0, 1.0));
        Ok(Self { r: clamp(r), g: clamp(g), b: clamp(b) })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.r.dim()
    }

    pub fn r(&self) -> &Array2<f64> {
        &self.r
    }

    pub fn g(&self) -> &Array2<f64> {
        &self.g
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }
}

/// Returns `(Y, Cb, Cr)` with chroma offset by 0.5.
pub fn ycbcr_split(img: &RgbImage) -> (ImageGray, ImageGray, ImageGray) {
    let dim = img.dims();
    let mut y = Array2::zeros(dim);
    let mut cb = Array2::zeros(dim);
    let mut cr = Array2::zeros(dim);
    Zip::from(&mut y).and(&mut cb).and(&mut cr).and(&img.r).and(&img.g).and(&img.b).for_each(
        |y, cb, cr, &r, &g, &b| {
            *y = KR * r + KG * g + KB * b;
            *cb = 0.5 + (b - *y) / (2.0 * (1.0 - KB));
            *cr = 0.5 + (r - *y) / (2.0 * (1.0 - KR));
        },
    );
    let wrap = |p: Array2<f64>| ImageGray::from_clamped(p.mapv(|x| x.clamp(0.0, 1.0)));
    (wrap(y), wrap(cb), wrap(cr))
}

/// Inverse of [`ycbcr_split`]; the result is clamped to `[0, 1]`.
pub fn ycbcr_merge(y: &ImageGray, cb: &ImageGray, cr: &ImageGray) -> Result<RgbImage> {
    let dim = y.pixels().dim();
    for (name, p) in [("Cb plane", cb), ("Cr plane", cr)] {
        if p.pixels().dim() != dim {
            return Err(Error::dims(name, dim, p.pixels().dim()));
        }
    }
    let mut r = Array2::zeros(dim);
    let mut g = Array2::zeros(dim);
    let mut b = Array2::zeros(dim);
    Zip::from(&mut r).and(&mut g).and(&mut b).and(y.pixels()).and(cb.pixels()).and(cr.pixels()).for_each(
        |r, g, b, &y, &cb, &cr| {
            *r = y + 2.0 * (1.0 - KR) * (cr - 0.5);
            *b = y + 2.0 * (1.0 - KB) * (cb - 0.5);
            *g = (y - KR * *r - KB * *b) / KG;
        },
    );
    RgbImage::new(r, g, b)
}
