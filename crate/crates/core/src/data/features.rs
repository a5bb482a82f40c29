//! First and second derivative maps used as super-resolution features.

use ndarray::Array2;

use super::ImageGray;

/// Number of maps returned by [`extract_features`].
pub const FEATURE_CHANNELS: usize = 4;

const F1: [(isize, f64); 2] = [(-1, -1.0), (1, 1.0)];
const F2: [(isize, f64); 3] = [(-2, 1.0), (0, -2.0), (2, 1.0)];

fn filter(img: &Array2<f64>, taps: &[(isize, f64)], along_cols: bool) -> Array2<f64> {
    let (rows, cols) = img.dim();
    let clampi = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        taps.iter()
            .map(|&(off, w)| {
                let v = if along_cols {
                    img[[r, clampi(c as isize + off, cols)]]
                } else {
                    img[[clampi(r as isize + off, rows), c]]
                };
                w * v
            })
            .sum()
    })
}

/// `[∂x, ∂y, ∂xx, ∂yy]` where `x` runs along columns.
///
/// Each map is the correlation of the image with `[-1, 0, 1]` or
/// `[1, 0, -2, 0, 1]` (or their transposes) under replicate padding, so a
/// ramp increasing to the right has a positive `∂x`.
pub fn extract_features(img: &ImageGray) -> [Array2<f64>; FEATURE_CHANNELS] {
    let p = img.pixels();
    [filter(p, &F1, true), filter(p, &F1, false), filter(p, &F2, true), filter(p, &F2, false)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_features() {
        let f = extract_features(&ImageGray::filled(6, 5, 0.4).unwrap());
        assert!(f.iter().all(|m| m.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn horizontal_ramp() {
        let cols = 10;
        let img = ImageGray::new(Array2::from_shape_fn((4, cols), |(_, j)| j as f64 / cols as f64)).unwrap();
        let [zx, zy, zxx, zyy] = extract_features(&img);
        for r in 0..4 {
            for c in 2..cols - 2 {
                assert!((zx[[r, c]] - 2.0 / cols as f64).abs() < 1e-12);
                assert!(zxx[[r, c]].abs() < 1e-12);
            }
        }
        assert!(zy.iter().chain(zyy.iter()).all(|&v| v == 0.0));
        assert!((zx[[0, 0]] - 1.0 / cols as f64).abs() < 1e-12);
    }

    #[test]
    fn transposition_swaps_directions() {
        let img = ImageGray::new(Array2::from_shape_fn((5, 7), |(r, c)| ((r * 3 + c * c) % 11) as f64 / 10.0)).unwrap();
        let f = extract_features(&img);
        let t = extract_features(&img.transpose());
        assert_eq!(t[0], f[1].t());
        assert_eq!(t[1], f[0].t());
        assert_eq!(t[2], f[3].t());
        assert_eq!(t[3], f[2].t());
    }
}
