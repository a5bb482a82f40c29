use ndarray::{s, Array2};

use crate::data::ImageGray;
use crate::model::MvrbmParams;

/// `(K·(I+1) − 1, L·(J+1) − 1)`: a K×L grid of I×J tiles with one-pixel
/// gutters.
pub fn grid_dims(params: &MvrbmParams) -> (usize, usize) {
    let ((i, j), (k, l)) = (params.visible_dims(), params.hidden_dims());
    (k * (i + 1) - 1, l * (j + 1) - 1)
}

/// Renders every dictionary atom `uₖ vₗᵀ` (column `k + l·K` of `Vᵀ ⊗ Uᵀ`
/// reshaped to I×J) as a tile at grid position `(k, l)`.
///
/// Tiles are min-max normalised independently; a constant tile renders
/// black. Gutters are white.
pub fn filter_grid(params: &MvrbmParams) -> ImageGray {
    let ((i, j), (k, l)) = (params.visible_dims(), params.hidden_dims());
    let mut grid = Array2::from_elem(grid_dims(params), 1.0);
    let (u, v) = (params.u(), params.v());
    for a in 0..k {
        for b in 0..l {
            let tile = Array2::from_shape_fn((i, j), |(r, c)| u[[a, r]] * v[[b, c]]);
            let lo = tile.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = tile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm = if hi > lo { tile.mapv(|t| (t - lo) / (hi - lo)) } else { Array2::zeros((i, j)) };
            let (r0, c0) = (a * (i + 1), b * (j + 1));
            grid.slice_mut(s![r0..r0 + i, c0..c0 + j]).assign(&norm);
        }
    }
    ImageGray::new(grid).expect("normalised tiles")
}
