use std::path::{Path, PathBuf};

use ndarray::{s, Array2};

use crate::config::Config;
use crate::data::{extract_features, sample_patches, ChannelScaling, ImageGray, SrPair, FEATURE_CHANNELS};
use crate::error::{Error, Result};
use crate::eval::{psnr, MetricRow, Metrics};
use crate::multimodal::{sr_infer, MultimodalParams, MultimodalShape};
use crate::persistence::{self, Model};
use crate::rng::seeded;
use crate::trainer::{train_model, EpochReport, TrainConfig, TrainHooks};

pub const DEFAULT_CYCLES: usize = 3;

/// What the primary channel holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrEncoding {
    /// The high-resolution patch itself; inference starts from the bicubic patch.
    Raw,
    /// The high-resolution patch minus its bicubic estimate, rescaled;
    /// inference starts from a zero residual.
    Residual,
}

impl SrEncoding {
    pub fn name(self) -> &'static str {
        match self {
            SrEncoding::Raw => "raw",
            SrEncoding::Residual => "residual",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(SrEncoding::Raw),
            "residual" => Ok(SrEncoding::Residual),
            other => Err(Error::Config(format!("unknown encoding {other:?} (expected raw or residual)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrTrainConfig {
    pub patch: usize,
    pub patches: usize,
    pub factor: usize,
    pub hidden: (usize, usize),
    pub encoding: SrEncoding,
    /// Channels are mapped from `mean ± spread·σ` onto `[0, 1]`.
    pub spread: f64,
    pub train: TrainConfig,
}

impl Default for SrTrainConfig {
    fn default() -> Self {
        Self {
            patch: 15,
            patches: 10_000,
            factor: 2,
            hidden: (20, 20),
            encoding: SrEncoding::Residual,
            spread: 3.0,
            train: TrainConfig { mean_field_negative: true, ..TrainConfig::default() },
        }
    }
}

/// A trained multimodal model plus how its channels are encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct SrModel {
    pub params: MultimodalParams,
    pub scaling: ChannelScaling,
    pub encoding: SrEncoding,
    pub patch: usize,
    pub factor: usize,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".sr");
    PathBuf::from(p)
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn split(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Format(format!("bad number {x:?} in encoding file"))))
        .collect()
}

impl SrModel {
    /// Writes the model artifact to `path` and the channel encoding to
    /// `path` with `.sr` appended.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        persistence::save(&Model::Multimodal(self.params.clone()), path)?;
        let text = format!(
            "encoding = {}\npatch = {}\nfactor = {}\nlo = {}\nhi = {}\n",
            self.encoding.name(),
            self.patch,
            self.factor,
            join(&self.scaling.lo),
            join(&self.scaling.hi)
        );
        std::fs::write(sidecar(path), text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let params = match persistence::load(path)? {
            Model::Multimodal(p) => p,
            other => {
                return Err(Error::Format(format!(
                    "{} holds a {} model, not mmvrbm",
                    path.display(),
                    other.kind().name()
                )));
            }
        };
        let cfg = Config::load(sidecar(path)).map_err(|e| Error::Format(e.to_string()))?;
        let need = |k: &str| cfg.raw(k).ok_or_else(|| Error::Format(format!("encoding file lacks {k}")));
        let scaling = ChannelScaling { lo: split(need("lo")?)?, hi: split(need("hi")?)? };
        let model = Self {
            encoding: SrEncoding::parse(need("encoding")?).map_err(|e| Error::Format(e.to_string()))?,
            patch: need("patch")?.parse().map_err(|_| Error::Format("bad patch size".into()))?,
            factor: need("factor")?.parse().map_err(|_| Error::Format("bad factor".into()))?,
            scaling,
            params,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let dims = self.params.channel_dims();
        if dims.len() != 1 + FEATURE_CHANNELS || dims.iter().any(|&d| d != (self.patch, self.patch)) {
            return Err(Error::Format(format!(
                "model channels {dims:?} do not match {} channels of {}x{} patches",
                1 + FEATURE_CHANNELS,
                self.patch,
                self.patch
            )));
        }
        if self.scaling.lo.len() != dims.len() || self.scaling.hi.len() != dims.len() {
            return Err(Error::Format("encoding has the wrong number of channels".into()));
        }
        Ok(())
    }

    fn initial(&self, bicubic: &Array2<f64>) -> Array2<f64> {
        match self.encoding {
            SrEncoding::Raw => self.scaling.apply(0, bicubic),
            SrEncoding::Residual => self.scaling.apply(0, &Array2::zeros(bicubic.dim())),
        }
    }

    fn decode_primary(&self, x: &Array2<f64>, bicubic: &Array2<f64>) -> Array2<f64> {
        match self.encoding {
            SrEncoding::Raw => self.scaling.invert(0, x),
            SrEncoding::Residual => bicubic + &self.scaling.invert(0, x),
        }
    }
}

/// Samples patches from the high-resolution corpus and trains the model.
///
/// One seeded stream drives, in order: patch positions, parameter
/// initialisation, and training.
pub fn train_superres(
    corpus: &[ImageGray],
    cfg: &SrTrainConfig,
    hooks: TrainHooks<'_, MultimodalParams>,
) -> Result<(SrModel, Vec<EpochReport>)> {
    cfg.train.validate()?;
    if cfg.patches == 0 {
        return Err(Error::Config("at least one training patch is needed".into()));
    }
    if cfg.spread.is_nan() || cfg.spread <= 0.0 {
        return Err(Error::Config(format!("spread must be positive, got {}", cfg.spread)));
    }
    let pairs = corpus.iter().map(|img| SrPair::from_hr(img, cfg.factor)).collect::<Result<Vec<_>>>()?;
    let mut rng = seeded(cfg.train.seed);
    let set = sample_patches(&pairs, cfg.patch, cfg.patches, &mut rng)?;

    let primary: Vec<Array2<f64>> = match cfg.encoding {
        SrEncoding::Raw => set.samples.iter().map(|s| s.x.clone()).collect(),
        SrEncoding::Residual => set.samples.iter().zip(&set.bicubic).map(|(s, b)| &s.x - b).collect(),
    };
    let raw: Vec<Vec<Array2<f64>>> =
        set.samples.iter().zip(primary).map(|(s, x)| std::iter::once(x).chain(s.z.iter().cloned()).collect()).collect();
    let mut scaling = ChannelScaling::fit(&raw, cfg.spread)?;
    if cfg.encoding == SrEncoding::Raw {
        scaling.lo[0] = 0.0;
        scaling.hi[0] = 1.0;
    }
    let data: Vec<Vec<Array2<f64>>> =
        raw.iter().map(|chs| chs.iter().enumerate().map(|(e, m)| scaling.apply(e, m)).collect()).collect();

    let shape = MultimodalShape { channels: vec![(cfg.patch, cfg.patch); 1 + FEATURE_CHANNELS], hidden: cfg.hidden };
    let init = MultimodalParams::random(&shape, &mut rng)?;
    let (params, reports) = train_model(init, &data, &cfg.train, &mut rng, hooks)?;
    Ok((SrModel { params, scaling, encoding: cfg.encoding, patch: cfg.patch, factor: cfg.factor }, reports))
}

fn starts(n: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=n - patch).step_by(stride).collect();
    if *v.last().expect("n >= patch") != n - patch {
        v.push(n - patch);
    }
    v
}

/// Patch-wise inference over an image already upscaled by bicubic
/// interpolation. Patches sit on a `stride` grid (the last row and column
/// are flush with the border) and overlapping outputs are averaged.
pub fn super_resolve(model: &SrModel, upscaled: &ImageGray, cycles: usize, stride: usize) -> Result<ImageGray> {
    let p = model.patch;
    let (rows, cols) = (upscaled.rows(), upscaled.cols());
    if rows < p || cols < p {
        return Err(Error::InvalidValue(format!("{rows}x{cols} image is smaller than the {p}x{p} model patch")));
    }
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let features = extract_features(upscaled);
    let base = upscaled.pixels();
    let mut sum = Array2::<f64>::zeros((rows, cols));
    let mut count = Array2::<f64>::zeros((rows, cols));
    for &r in &starts(rows, p, stride) {
        for &c in &starts(cols, p, stride) {
            let window = s![r..r + p, c..c + p];
            let bicubic = base.slice(window).to_owned();
            let z: Vec<Array2<f64>> = features
                .iter()
                .enumerate()
                .map(|(e, f)| model.scaling.apply(e + 1, &f.slice(window).to_owned()))
                .collect();
            let x = sr_infer(&z, &model.initial(&bicubic), &model.params, cycles)?;
            let patch = model.decode_primary(&x, &bicubic);
            sum.slice_mut(window).zip_mut_with(&patch, |a, b| *a += b);
            count.slice_mut(window).mapv_inplace(|n| n + 1.0);
        }
    }
    ImageGray::new(sum / count)
}

/// Bicubic baseline and model output for one held-out image.
#[derive(Debug, Clone)]
pub struct SrReport {
    pub reference: ImageGray,
    pub bicubic: ImageGray,
    pub output: ImageGray,
    pub bicubic_metrics: Metrics,
    pub model_metrics: Metrics,
}

impl SrReport {
    /// Downscales `hr` by the model factor, upscales it again bicubically,
    /// and runs the model on the result.
    pub fn evaluate(model: &SrModel, hr: &ImageGray, cycles: usize, stride: usize) -> Result<Self> {
        let pair = SrPair::from_hr(hr, model.factor)?;
        let output = super_resolve(model, &pair.upscaled, cycles, stride)?;
        Ok(Self {
            bicubic_metrics: psnr(pair.hr.pixels(), pair.upscaled.pixels())?,
            model_metrics: psnr(pair.hr.pixels(), output.pixels())?,
            reference: pair.hr,
            bicubic: pair.upscaled,
            output,
        })
    }

    pub fn gain_db(&self) -> f64 {
        self.model_metrics.psnr - self.bicubic_metrics.psnr
    }
}

/// Published ×2 results on the 256×256 test portrait with 15×15 patches.
pub fn paper_superres_rows() -> Vec<MetricRow> {
    vec![
        MetricRow::paper("superres_bicubic", "rmse", 5.0134),
        MetricRow::paper("superres_bicubic", "psnr", 34.1282),
        MetricRow::paper("superres_sparse_coding", "rmse", 4.0900),
        MetricRow::paper("superres_sparse_coding", "psnr", 35.8963),
        MetricRow::paper("superres_mvrbm", "rmse", 4.3804),
        MetricRow::paper("superres_mvrbm", "psnr", 35.3006),
    ]
}
