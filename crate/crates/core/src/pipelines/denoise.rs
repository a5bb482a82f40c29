use ndarray::Array2;

use crate::data::{binarize, salt_pepper, ImageGray};
use crate::error::Result;
use crate::eval::reconstruction_error;
use crate::model::{bernoulli_array, hidden_activation, visible_activation, ActivationMatrix, Matrix, MvrbmParams};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub noise_fraction: f64,
    /// Binarise the noisy image before inference; raw intensities when `None`.
    pub threshold: Option<f64>,
    /// Sample the hidden layer instead of using its mean.
    pub sample_hidden: bool,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self { noise_fraction: 0.1, threshold: Some(0.5), sample_hidden: false }
    }
}

#[derive(Debug, Clone)]
pub struct DenoiseOutcome {
    pub noisy: Vec<ImageGray>,
    pub denoised: Vec<ImageGray>,
    /// Per-pixel MAE of the noisy and denoised images against the clean ones.
    pub mae_noisy: Vec<f64>,
    pub mae_denoised: Vec<f64>,
}

impl DenoiseOutcome {
    pub fn mean_noisy(&self) -> f64 {
        mean(&self.mae_noisy)
    }

    pub fn mean_denoised(&self) -> f64 {
        mean(&self.mae_denoised)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Corrupts each clean image, then reconstructs it with one up-down pass
/// through the model. Per image the stream is consumed by the noise first,
/// then (when sampling) by the hidden layer.
pub fn denoise(
    params: &MvrbmParams,
    clean: &[ImageGray],
    cfg: &DenoiseConfig,
    rng: &mut StreamRng,
) -> Result<DenoiseOutcome> {
    let mut out = DenoiseOutcome { noisy: vec![], denoised: vec![], mae_noisy: vec![], mae_denoised: vec![] };
    for img in clean {
        let noisy = salt_pepper(img, cfg.noise_fraction, rng)?;
        let input: Array2<f64> = match cfg.threshold {
            Some(t) => binarize(&noisy, t)?.into_inner(),
            None => noisy.pixels().clone(),
        };
        let h = hidden_activation(&input, params)?;
        let h: ActivationMatrix =
            if cfg.sample_hidden { ActivationMatrix::new(bernoulli_array(h.values(), rng))? } else { h };
        let recon = visible_activation(&h, params)?.into_inner();
        out.mae_noisy.push(reconstruction_error(img.pixels(), noisy.pixels())?.per_pixel);
        out.mae_denoised.push(reconstruction_error(img.pixels(), &recon)?.per_pixel);
        out.noisy.push(noisy);
        out.denoised.push(ImageGray::new(recon)?);
    }
    Ok(out)
}
