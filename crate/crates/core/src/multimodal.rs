//! Multimodal MVRBM: several visible matrix channels share one hidden matrix.
//!
//! Channel 0 is the primary channel `X` with factors `(U, V)` and bias `B`;
//! channel `e ≥ 1` is the feature channel `Zₑ` with factors `(Qₑ, Rₑ)` and
//! bias `Aₑ`. The energy is
//!
//! ```text
//! E = −tr(Uᵀ Y V Xᵀ) − tr(Xᵀ B) − Σₑ [tr(Qₑᵀ Y Rₑ Zₑᵀ) + tr(Zₑᵀ Aₑ)] − tr(Yᵀ C)
//! ```
//!
//! so the hidden pre-activation is `U X Vᵀ + Σₑ Qₑ Zₑ Rₑᵀ + C` and every
//! channel's visible pre-activation is `Qₑᵀ Y Rₑ + Aₑ`.

use ndarray::{Array2, ArrayViewD, ArrayViewMutD};

use crate::error::{Error, Result};
use crate::model::{self, gaussian_fill, ActivationMatrix, Matrix, MvrbmParams, INIT_STD};
use crate::rng::{seeded, StreamRng};
use crate::trainer::{self, frobenius, mean_abs_diff, CdModel, EpochReport, ParamSet, TrainConfig, TrainHooks};

/// Factors and bias of one visible channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    /// K×H
    pub left: Array2<f64>,
    /// L×W
    pub right: Array2<f64>,
    /// H×W
    pub bias: Array2<f64>,
}

impl Channel {
    pub fn zeros(dims: (usize, usize), hidden: (usize, usize)) -> Self {
        Self {
            left: Array2::zeros((hidden.0, dims.0)),
            right: Array2::zeros((hidden.1, dims.1)),
            bias: Array2::zeros(dims),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bias.dim()
    }
}

/// Visible channel sizes (primary first) and the shared hidden size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultimodalShape {
    pub channels: Vec<(usize, usize)>,
    pub hidden: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalParams {
    channels: Vec<Channel>,
    c: Array2<f64>,
}

impl MultimodalParams {
    /// `channels[0]` is the primary channel.
    pub fn new(channels: Vec<Channel>, c: Array2<f64>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Config("a multimodal model needs a primary channel".into()));
        }
        let hidden = c.dim();
        if hidden.0 == 0 || hidden.1 == 0 {
            return Err(Error::Config("hidden layer must be at least 1x1".into()));
        }
        for ch in &channels {
            let (h, w) = ch.dims();
            if h == 0 || w == 0 {
                return Err(Error::Config("visible channels must be at least 1x1".into()));
            }
            if ch.left.dim() != (hidden.0, h) {
                return Err(Error::dims("channel left factor", (hidden.0, h), ch.left.dim()));
            }
            if ch.right.dim() != (hidden.1, w) {
                return Err(Error::dims("channel right factor", (hidden.1, w), ch.right.dim()));
            }
        }
        let params = Self { channels, c };
        if !params.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidValue("parameters contain NaN or infinity".into()));
        }
        Ok(params)
    }

    pub fn zeros(shape: &MultimodalShape) -> Result<Self> {
        let channels = shape.channels.iter().map(|&d| Channel::zeros(d, shape.hidden)).collect();
        Self::new(channels, Array2::zeros(shape.hidden))
    }

    /// Gaussian factors, zero biases. Draws `U`, `V`, then `Qₑ`, `Rₑ` for
    /// each feature channel in order.
    pub fn random(shape: &MultimodalShape, rng: &mut StreamRng) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        for ch in &mut p.channels {
            gaussian_fill(&mut ch.left, INIT_STD, rng);
            gaussian_fill(&mut ch.right, INIT_STD, rng);
        }
        Ok(p)
    }

    /// Lifts an MVRBM to a multimodal model with a primary channel only.
    pub fn from_mvrbm(p: &MvrbmParams) -> Self {
        Self { channels: vec![Channel { left: p.u.clone(), right: p.v.clone(), bias: p.b.clone() }], c: p.c.clone() }
    }

    /// The primary channel as an MVRBM, dropping feature channels.
    pub fn primary_mvrbm(&self) -> MvrbmParams {
        let ch = &self.channels[0];
        MvrbmParams { u: ch.left.clone(), v: ch.right.clone(), b: ch.bias.clone(), c: self.c.clone() }
    }

    pub fn shape(&self) -> MultimodalShape {
        MultimodalShape { channels: self.channel_dims(), hidden: self.hidden_dims() }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Channel] {
        &mut self.channels
    }

    pub fn hidden_bias(&self) -> &Array2<f64> {
        &self.c
    }

    /// Number of feature channels `E` (excluding the primary channel).
    pub fn feature_channels(&self) -> usize {
        self.channels.len() - 1
    }

    pub fn channel_dims(&self) -> Vec<(usize, usize)> {
        self.channels.iter().map(Channel::dims).collect()
    }

    pub fn hidden_dims(&self) -> (usize, usize) {
        self.c.dim()
    }

    fn check_channels(&self, v: &[Array2<f64>]) -> Result<()> {
        if v.len() != self.channels.len() {
            return Err(Error::InvalidValue(format!(
                "expected {} visible channels, got {}",
                self.channels.len(),
                v.len()
            )));
        }
        for (ch, x) in self.channels.iter().zip(v) {
            if x.dim() != ch.dims() {
                return Err(Error::dims("visible channel", ch.dims(), x.dim()));
            }
        }
        Ok(())
    }

    fn check_hidden(&self, y: &Array2<f64>) -> Result<()> {
        if y.dim() != self.hidden_dims() {
            return Err(Error::dims("hidden Y", self.hidden_dims(), y.dim()));
        }
        Ok(())
    }

    fn hidden_input(&self, v: &[Array2<f64>]) -> Array2<f64> {
        let (primary, features) = self.channels.split_first().expect("primary channel");
        let mut pre = primary.left.dot(&v[0]).dot(&primary.right.t());
        for (ch, z) in features.iter().zip(&v[1..]) {
            pre += &ch.left.dot(z).dot(&ch.right.t());
        }
        pre += &self.c;
        pre
    }

    fn visible_input(&self, y: &Array2<f64>, channel: usize) -> Array2<f64> {
        let ch = &self.channels[channel];
        let mut pre = ch.left.t().dot(y).dot(&ch.right);
        pre += &ch.bias;
        pre
    }
}

/// One training (or inference) sample: the primary patch and its features.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalSample {
    pub x: Array2<f64>,
    pub z: Vec<Array2<f64>>,
}

impl MultimodalSample {
    pub fn channels(&self) -> Vec<Array2<f64>> {
        let mut v = Vec::with_capacity(1 + self.z.len());
        v.push(self.x.clone());
        v.extend(self.z.iter().cloned());
        v
    }
}

pub fn mm_energy(sample: &MultimodalSample, y: &impl Matrix, params: &MultimodalParams) -> Result<f64> {
    mm_energy_channels(&sample.channels(), y.values(), params)
}

/// Energy for a visible state given as a channel list (primary first).
pub fn mm_energy_channels(v: &[Array2<f64>], y: &Array2<f64>, params: &MultimodalParams) -> Result<f64> {
    params.check_channels(v)?;
    params.check_hidden(y)?;
    let mut e = -(y * &params.c).sum();
    for (ch, x) in params.channels.iter().zip(v) {
        let coupling = (&ch.left.t().dot(y).dot(&ch.right) * x).sum();
        e -= coupling + (x * &ch.bias).sum();
    }
    Ok(e)
}

/// `σ(U X Vᵀ + Σₑ Qₑ Zₑ Rₑᵀ + C)`.
pub fn mm_hidden_activation(sample: &MultimodalSample, params: &MultimodalParams) -> Result<ActivationMatrix> {
    let v = sample.channels();
    params.check_channels(&v)?;
    Ok(ActivationMatrix::from_probabilities(params.hidden_input(&v).mapv(model::sigmoid)))
}

/// `σ(Uᵀ Y V + B)` for channel 0, `σ(Qₑᵀ Y Rₑ + Aₑ)` for channel `e`.
pub fn mm_visible_activation(y: &impl Matrix, params: &MultimodalParams, channel: usize) -> Result<ActivationMatrix> {
    if channel >= params.channels.len() {
        return Err(Error::InvalidValue(format!(
            "channel {channel} does not exist (model has {})",
            params.channels.len()
        )));
    }
    let y = y.values();
    params.check_hidden(y)?;
    Ok(ActivationMatrix::from_probabilities(params.visible_input(y, channel).mapv(model::sigmoid)))
}

/// Per-channel increments plus the shared hidden bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalGradient {
    pub channels: Vec<Channel>,
    pub dc: Array2<f64>,
}

impl MultimodalGradient {
    pub fn zeros_like(params: &MultimodalParams) -> Self {
        Self {
            channels: params.channels.iter().map(|ch| Channel::zeros(ch.dims(), params.hidden_dims())).collect(),
            dc: Array2::zeros(params.hidden_dims()),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, w: f64) {
        for (a, b) in self.channels.iter_mut().zip(&other.channels) {
            a.left.scaled_add(w, &b.left);
            a.right.scaled_add(w, &b.right);
            a.bias.scaled_add(w, &b.bias);
        }
        self.dc.scaled_add(w, &other.dc);
    }
}

impl ParamSet for MultimodalParams {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut t = Vec::with_capacity(3 * self.channels.len() + 1);
        for ch in &self.channels {
            t.extend([ch.left.view().into_dyn(), ch.right.view().into_dyn(), ch.bias.view().into_dyn()]);
        }
        t.push(self.c.view().into_dyn());
        t
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut t = Vec::with_capacity(3 * self.channels.len() + 1);
        for ch in &mut self.channels {
            t.extend([ch.left.view_mut().into_dyn(), ch.right.view_mut().into_dyn(), ch.bias.view_mut().into_dyn()]);
        }
        t.push(self.c.view_mut().into_dyn());
        t
    }
}

impl ParamSet for MultimodalGradient {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        let mut t = Vec::with_capacity(3 * self.channels.len() + 1);
        for ch in &self.channels {
            t.extend([ch.left.view().into_dyn(), ch.right.view().into_dyn(), ch.bias.view().into_dyn()]);
        }
        t.push(self.dc.view().into_dyn());
        t
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        let mut t = Vec::with_capacity(3 * self.channels.len() + 1);
        for ch in &mut self.channels {
            t.extend([ch.left.view_mut().into_dyn(), ch.right.view_mut().into_dyn(), ch.bias.view_mut().into_dyn()]);
        }
        t.push(self.dc.view_mut().into_dyn());
        t
    }
}

fn accumulate_mm(
    v: &[Array2<f64>],
    h: &Array2<f64>,
    params: &MultimodalParams,
    weight: f64,
    g: &mut MultimodalGradient,
) {
    for ((ch, gch), x) in params.channels.iter().zip(&mut g.channels).zip(v) {
        gch.left.scaled_add(weight, &h.dot(&ch.right).dot(&x.t()));
        gch.right.scaled_add(weight, &h.t().dot(&ch.left).dot(x));
        gch.bias.scaled_add(weight, x);
    }
    g.dc.scaled_add(weight, h);
}

/// `(Y Rₑ Zₑᵀ, Yᵀ Qₑ Zₑ, Zₑ)` per channel and `Y` for the hidden bias: the
/// negative energy gradient at a joint state (or its conditional mean when
/// `h` holds hidden probabilities).
pub fn mm_phase_statistics(v: &[Array2<f64>], h: &Array2<f64>, params: &MultimodalParams) -> MultimodalGradient {
    let mut g = MultimodalGradient::zeros_like(params);
    accumulate_mm(v, h, params, 1.0, &mut g);
    g
}

impl CdModel for MultimodalParams {
    type Visible = Vec<Array2<f64>>;
    type Hidden = Array2<f64>;
    type Grad = MultimodalGradient;

    fn zero_grad(&self) -> MultimodalGradient {
        MultimodalGradient::zeros_like(self)
    }

    fn decayed(&self) -> Vec<bool> {
        let mut d: Vec<bool> = self.channels.iter().flat_map(|_| [true, true, false]).collect();
        d.push(false);
        d
    }

    fn check_visible(&self, v: &Vec<Array2<f64>>) -> Result<()> {
        self.check_channels(v)
    }

    fn hidden_probs(&self, v: &Vec<Array2<f64>>) -> Array2<f64> {
        self.hidden_input(v).mapv(model::sigmoid)
    }

    fn sample_hidden(&self, probs: &Array2<f64>, rng: &mut StreamRng) -> Array2<f64> {
        model::bernoulli_array(probs, rng)
    }

    fn visible_probs(&self, h: &Array2<f64>) -> Vec<Array2<f64>> {
        (0..self.channels.len()).map(|e| self.visible_input(h, e).mapv(model::sigmoid)).collect()
    }

    fn sample_visible(&self, probs: &Vec<Array2<f64>>, rng: &mut StreamRng) -> Vec<Array2<f64>> {
        probs.iter().map(|p| model::bernoulli_array(p, rng)).collect()
    }

    fn accumulate(&self, v: &Vec<Array2<f64>>, h: &Array2<f64>, weight: f64, grad: &mut MultimodalGradient) {
        accumulate_mm(v, h, self, weight, grad);
    }

    fn reconstruction_mae(&self, data: &Vec<Array2<f64>>, recon: &Vec<Array2<f64>>) -> f64 {
        mean_abs_diff(&data[0], &recon[0])
    }

    fn telemetry_norms(g: &MultimodalGradient) -> [f64; 4] {
        let combined =
            |f: fn(&Channel) -> &Array2<f64>| g.channels.iter().map(|ch| frobenius(f(ch)).powi(2)).sum::<f64>().sqrt();
        [combined(|c| &c.left), combined(|c| &c.right), combined(|c| &c.bias), frobenius(&g.dc)]
    }
}

/// CD-K training of a multimodal model with fresh parameters.
///
/// The Gibbs chain alternates `Y | all channels` and `all channels | Y`,
/// drawing the hidden layer, then each channel in order.
pub fn mm_train(
    samples: &[MultimodalSample],
    shape: &MultimodalShape,
    cfg: &TrainConfig,
) -> Result<(MultimodalParams, Vec<EpochReport>)> {
    let data: Vec<Vec<Array2<f64>>> = samples.iter().map(MultimodalSample::channels).collect();
    mm_train_channels(&data, shape, cfg, TrainHooks::default())
}

pub fn mm_train_channels(
    data: &[Vec<Array2<f64>>],
    shape: &MultimodalShape,
    cfg: &TrainConfig,
    hooks: TrainHooks<'_, MultimodalParams>,
) -> Result<(MultimodalParams, Vec<EpochReport>)> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    let init = MultimodalParams::random(shape, &mut rng)?;
    trainer::train_model(init, data, cfg, &mut rng, hooks)
}

/// Mean-field super-resolution inference.
///
/// The feature channels stay clamped to `z`; each cycle computes the hidden
/// probabilities from `(X, Z)` and replaces `X` by the primary channel's
/// visible probabilities. No random draws are made.
pub fn sr_infer(z: &[Array2<f64>], x0: &Array2<f64>, params: &MultimodalParams, cycles: usize) -> Result<Array2<f64>> {
    Ok(sr_infer_trace(z, x0, params, cycles)?.pop().expect("at least one cycle"))
}

/// Like [`sr_infer`], returning the estimate after every cycle.
pub fn sr_infer_trace(
    z: &[Array2<f64>],
    x0: &Array2<f64>,
    params: &MultimodalParams,
    cycles: usize,
) -> Result<Vec<Array2<f64>>> {
    if cycles == 0 {
        return Err(Error::Config("inference needs at least one cycle".into()));
    }
    let mut v = Vec::with_capacity(1 + z.len());
    v.push(x0.clone());
    v.extend(z.iter().cloned());
    params.check_channels(&v)?;
    let mut trace = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        let h = params.hidden_input(&v).mapv(model::sigmoid);
        v[0] = params.visible_input(&h, 0).mapv(model::sigmoid);
        trace.push(v[0].clone());
    }
    Ok(trace)
}
