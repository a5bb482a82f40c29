//! Contrastive-divergence training.
//!
//! The trainer stores the conventional ascent direction (positive phase minus
//! negative phase). The update
//!
//! ```text
//! Δθ ← γ·Δθ + α·(ascent − β·θ)      (β only on the interaction factors)
//! θ  ← θ + Δθ
//! ```
//!
//! is the momentum step of the CD-K procedure with the Frobenius penalty
//! `β/2·(‖U‖² + ‖V‖²)`.
//!
//! Any bipartite model that implements [`CdModel`] trains through the same
//! epoch loop; the classic RBM baseline and the multimodal model reuse it.
//!
//! Draw order of one epoch: a Fisher–Yates shuffle of the sample indices,
//! then for every batch and every sample in it (in batch order) the `K`
//! Gibbs sweeps, each sweep drawing the hidden layer then the visible layer
//! in row-major order. Initialisation draws come first, before epoch 1.

use std::io::Write;
use std::time::Instant;

use ndarray::{Array2, ArrayViewD, ArrayViewMutD, Zip};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::{self, BinaryMatrix, LayerShape, Matrix, MvrbmParams};
use crate::rng::{seeded, StreamRng};

/// Any parameter magnitude beyond this aborts training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub cd_steps: usize,
    pub seed: u64,
    /// Use the visible probabilities instead of binary samples for the chain
    /// states of the negative phase.
    pub mean_field_negative: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            learning_rate: 0.05,
            weight_decay: 0.01,
            momentum: 0.5,
            batch_size: 100,
            cd_steps: 1,
            seed: 0,
            mean_field_negative: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1".into());
        }
        if self.cd_steps == 0 {
            return fail("CD steps must be at least 1".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        Ok(())
    }
}

/// Parameter-shaped increments for `{U, V, B, C}`; also used for velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientIncrement {
    pub du: Array2<f64>,
    pub dv: Array2<f64>,
    pub db: Array2<f64>,
    pub dc: Array2<f64>,
}

impl GradientIncrement {
    pub fn zeros_like(params: &MvrbmParams) -> Self {
        Self {
            du: Array2::zeros(params.u.dim()),
            dv: Array2::zeros(params.v.dim()),
            db: Array2::zeros(params.b.dim()),
            dc: Array2::zeros(params.c.dim()),
        }
    }
}

/// Statistics of one `(X, H)` pair: `(H V Xᵀ, Hᵀ U X, X, H)`.
///
/// With `H` a binary hidden state these are `−∂E/∂θ`; with `H` the hidden
/// probabilities they are the conditional expectation of `−∂E/∂θ` given `X`.
pub fn phase_statistics(x: &Array2<f64>, h: &Array2<f64>, params: &MvrbmParams) -> GradientIncrement {
    let mut g = GradientIncrement::zeros_like(params);
    accumulate_statistics(x, h, params, 1.0, &mut g);
    g
}

pub(crate) fn accumulate_statistics(
    x: &Array2<f64>,
    h: &Array2<f64>,
    params: &MvrbmParams,
    weight: f64,
    g: &mut GradientIncrement,
) {
    g.du.scaled_add(weight, &h.dot(&params.v).dot(&x.t()));
    g.dv.scaled_add(weight, &h.t().dot(&params.u).dot(x));
    g.db.scaled_add(weight, x);
    g.dc.scaled_add(weight, h);
}

/// Per-epoch telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean per-pixel absolute error between each training sample and its
    /// one-sweep reconstruction, taken during the epoch.
    pub recon_error: f64,
    /// Mean per-batch Frobenius norm of the ascent direction for the left
    /// factor, right factor, visible bias and hidden bias, in that order.
    pub grad_norms: [f64; 4],
    pub seconds: f64,
}

pub const TELEMETRY_HEADER: &str = "epoch,recon_error,grad_norm_U,grad_norm_V,grad_norm_B,grad_norm_C,seconds";

pub fn write_telemetry(out: &mut impl Write, reports: &[EpochReport]) -> std::io::Result<()> {
    writeln!(out, "{TELEMETRY_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.epoch, r.recon_error, r.grad_norms[0], r.grad_norms[1], r.grad_norms[2], r.grad_norms[3], r.seconds
        )?;
    }
    Ok(())
}

/// A fixed list of real tensors that can be updated elementwise.
pub trait ParamSet {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>>;
    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>>;
}

impl ParamSet for MvrbmParams {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        vec![self.u.view().into_dyn(), self.v.view().into_dyn(), self.b.view().into_dyn(), self.c.view().into_dyn()]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![
            self.u.view_mut().into_dyn(),
            self.v.view_mut().into_dyn(),
            self.b.view_mut().into_dyn(),
            self.c.view_mut().into_dyn(),
        ]
    }
}

impl ParamSet for GradientIncrement {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        vec![self.du.view().into_dyn(), self.dv.view().into_dyn(), self.db.view().into_dyn(), self.dc.view().into_dyn()]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![
            self.du.view_mut().into_dyn(),
            self.dv.view_mut().into_dyn(),
            self.db.view_mut().into_dyn(),
            self.dc.view_mut().into_dyn(),
        ]
    }
}

/// A bipartite binary model trainable by contrastive divergence.
pub trait CdModel: ParamSet + Clone {
    type Visible: Clone;
    type Hidden;
    /// Same tensor list, in the same order, as the model's [`ParamSet`].
    type Grad: ParamSet + Clone;

    fn zero_grad(&self) -> Self::Grad;

    /// Which tensors carry the weight-decay penalty.
    fn decayed(&self) -> Vec<bool>;

    fn check_visible(&self, v: &Self::Visible) -> Result<()>;

    fn hidden_probs(&self, v: &Self::Visible) -> Self::Hidden;

    fn sample_hidden(&self, probs: &Self::Hidden, rng: &mut StreamRng) -> Self::Hidden;

    fn visible_probs(&self, h: &Self::Hidden) -> Self::Visible;

    fn sample_visible(&self, probs: &Self::Visible, rng: &mut StreamRng) -> Self::Visible;

    /// `grad += weight · stats(v, h)`.
    fn accumulate(&self, v: &Self::Visible, h: &Self::Hidden, weight: f64, grad: &mut Self::Grad);

    /// Mean absolute error over the entries of the primary visible channel.
    fn reconstruction_mae(&self, data: &Self::Visible, recon: &Self::Visible) -> f64;

    /// Norms reported in [`EpochReport::grad_norms`].
    fn telemetry_norms(grad: &Self::Grad) -> [f64; 4];
}

impl CdModel for MvrbmParams {
    type Visible = Array2<f64>;
    type Hidden = Array2<f64>;
    type Grad = GradientIncrement;

    fn zero_grad(&self) -> GradientIncrement {
        GradientIncrement::zeros_like(self)
    }

    fn decayed(&self) -> Vec<bool> {
        vec![true, true, false, false]
    }

    fn check_visible(&self, v: &Array2<f64>) -> Result<()> {
        if v.dim() != self.visible_dims() {
            return Err(Error::dims("training sample", self.visible_dims(), v.dim()));
        }
        Ok(())
    }

    fn hidden_probs(&self, v: &Array2<f64>) -> Array2<f64> {
        self.hidden_input(v.view()).mapv(model::sigmoid)
    }

    fn sample_hidden(&self, probs: &Array2<f64>, rng: &mut StreamRng) -> Array2<f64> {
        model::bernoulli_array(probs, rng)
    }

    fn visible_probs(&self, h: &Array2<f64>) -> Array2<f64> {
        self.visible_input(h.view()).mapv(model::sigmoid)
    }

    fn sample_visible(&self, probs: &Array2<f64>, rng: &mut StreamRng) -> Array2<f64> {
        model::bernoulli_array(probs, rng)
    }

    fn accumulate(&self, v: &Array2<f64>, h: &Array2<f64>, weight: f64, grad: &mut GradientIncrement) {
        accumulate_statistics(v, h, self, weight, grad);
    }

    fn reconstruction_mae(&self, data: &Array2<f64>, recon: &Array2<f64>) -> f64 {
        mean_abs_diff(data, recon)
    }

    fn telemetry_norms(g: &GradientIncrement) -> [f64; 4] {
        [frobenius(&g.du), frobenius(&g.dv), frobenius(&g.db), frobenius(&g.dc)]
    }
}

pub(crate) fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn mean_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + (x - y).abs()) / a.len() as f64
}

struct ChainOutcome<M: CdModel> {
    grad: M::Grad,
    recon_error: f64,
}

/// CD-K ascent direction over one batch, plus the mean one-sweep
/// reconstruction error of the batch.
fn cd_batch<M: CdModel>(
    model: &M,
    batch: &[&M::Visible],
    cd_steps: usize,
    mean_field_negative: bool,
    rng: &mut StreamRng,
) -> ChainOutcome<M> {
    let weight = 1.0 / batch.len() as f64;
    let mut grad = model.zero_grad();
    let mut recon_error = 0.0;
    for &x0 in batch {
        let h0 = model.hidden_probs(x0);
        model.accumulate(x0, &h0, weight, &mut grad);

        let mut x = x0.clone();
        let mut h = h0;
        for step in 0..cd_steps {
            if step > 0 {
                h = model.hidden_probs(&x);
            }
            let y = model.sample_hidden(&h, rng);
            let x_probs = model.visible_probs(&y);
            if step == 0 {
                recon_error += model.reconstruction_mae(x0, &x_probs);
            }
            x = if mean_field_negative { x_probs } else { model.sample_visible(&x_probs, rng) };
        }
        let h_neg = model.hidden_probs(&x);
        model.accumulate(&x, &h_neg, -weight, &mut grad);
    }
    ChainOutcome { grad, recon_error: recon_error * weight }
}

/// CD-K estimate of the log-likelihood ascent direction for a batch.
///
/// Positive phase: `σ(U Xₙ Vᵀ + C)` at the data. Negative phase: the same
/// statistics at the binary chain state `Xₙ⁽ᴷ⁾` after `K` Gibbs sweeps
/// started at `Xₙ`. Samples are processed in batch order.
pub fn cd_gradient(
    batch: &[BinaryMatrix],
    params: &MvrbmParams,
    cd_steps: usize,
    rng: &mut StreamRng,
) -> Result<GradientIncrement> {
    if batch.is_empty() {
        return Err(Error::Empty("CD batch"));
    }
    if cd_steps == 0 {
        return Err(Error::Config("CD steps must be at least 1".into()));
    }
    let views: Vec<&Array2<f64>> = batch.iter().map(|x| x.values()).collect();
    for x in &views {
        params.check_visible(x)?;
    }
    Ok(cd_batch(params, &views, cd_steps, false, rng).grad)
}

/// One momentum step. Returns the new parameters and velocity.
pub fn apply_update<M: CdModel>(
    params: &M,
    incr: &M::Grad,
    velocity: &M::Grad,
    cfg: &TrainConfig,
) -> Result<(M, M::Grad)> {
    let mut p = params.clone();
    let mut v = velocity.clone();
    update_in_place(&mut p, incr, &mut v, cfg);
    if let Some(bad) = first_unbounded(&p) {
        return Err(Error::InvalidValue(format!("update produced parameter value {bad}")));
    }
    Ok((p, v))
}

fn update_in_place<M: CdModel>(params: &mut M, incr: &M::Grad, velocity: &mut M::Grad, cfg: &TrainConfig) {
    let (alpha, beta, gamma) = (cfg.learning_rate, cfg.weight_decay, cfg.momentum);
    let decayed = params.decayed();
    let grads = incr.tensors();
    for (((mut p, mut v), g), decay) in
        params.tensors_mut().into_iter().zip(velocity.tensors_mut()).zip(grads).zip(decayed)
    {
        let beta = if decay { beta } else { 0.0 };
        Zip::from(&mut p).and(&mut v).and(&g).for_each(|p, v, &g| {
            *v = gamma * *v + alpha * (g - beta * *p);
            *p += *v;
        });
    }
}

fn first_unbounded<M: ParamSet>(params: &M) -> Option<f64> {
    params
        .tensors()
        .into_iter()
        .flat_map(|t| t.iter().copied().collect::<Vec<_>>())
        .find(|x| !x.is_finite() || x.abs() > DIVERGENCE_LIMIT)
}

/// Learning-rate and momentum schedule. The default keeps both constant.
pub trait Schedule {
    fn learning_rate(&self, _epoch: usize, base: f64) -> f64 {
        base
    }

    fn momentum(&self, _epoch: usize, base: f64) -> f64 {
        base
    }
}

pub struct Constant;

impl Schedule for Constant {}

/// Hooks into the epoch loop.
pub struct TrainHooks<'a, M> {
    pub schedule: &'a dyn Schedule,
    /// Called after every epoch with the current parameters.
    pub on_epoch: Option<&'a mut EpochCallback<'a, M>>,
}

pub type EpochCallback<'a, M> = dyn FnMut(&M, &EpochReport) + 'a;

impl<M> Default for TrainHooks<'_, M> {
    fn default() -> Self {
        Self { schedule: &Constant, on_epoch: None }
    }
}

/// Runs the CD-K epoch loop from the given initial model.
///
/// Each epoch reshuffles the data and visits every batch of `batch_size`
/// samples; the last batch keeps whatever remains and is weighted by its
/// own size.
pub fn train_model<M: CdModel>(
    init: M,
    data: &[M::Visible],
    cfg: &TrainConfig,
    rng: &mut StreamRng,
    mut hooks: TrainHooks<'_, M>,
) -> Result<(M, Vec<EpochReport>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    for v in data {
        init.check_visible(v)?;
    }
    let mut model = init;
    let mut velocity = model.zero_grad();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let step_cfg = TrainConfig {
            learning_rate: hooks.schedule.learning_rate(epoch, cfg.learning_rate),
            momentum: hooks.schedule.momentum(epoch, cfg.momentum),
            ..cfg.clone()
        };
        order.shuffle(rng);
        let mut recon_total = 0.0;
        let mut norm_totals = [0.0; 4];
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        for (b, idx) in batches.iter().enumerate() {
            let batch: Vec<&M::Visible> = idx.iter().map(|&i| &data[i]).collect();
            let out = cd_batch(&model, &batch, cfg.cd_steps, cfg.mean_field_negative, rng);
            recon_total += out.recon_error * idx.len() as f64;
            for (t, n) in norm_totals.iter_mut().zip(M::telemetry_norms(&out.grad)) {
                *t += n;
            }
            update_in_place(&mut model, &out.grad, &mut velocity, &step_cfg);
            if first_unbounded(&model).is_some() {
                return Err(Error::Diverged { epoch, batch: b + 1, reports });
            }
        }
        let report = EpochReport {
            epoch,
            recon_error: recon_total / data.len() as f64,
            grad_norms: norm_totals.map(|t| t / batches.len() as f64),
            seconds: started.elapsed().as_secs_f64(),
        };
        if let Some(cb) = hooks.on_epoch.as_mut() {
            cb(&model, &report);
        }
        reports.push(report);
    }
    Ok((model, reports))
}

/// Trains an MVRBM on binary images with freshly initialised parameters.
pub fn train(data: &[BinaryMatrix], shape: LayerShape, cfg: &TrainConfig) -> Result<(MvrbmParams, Vec<EpochReport>)> {
    let visible: Vec<Array2<f64>> = data.iter().map(|x| x.values().clone()).collect();
    train_arrays(&visible, shape, cfg, TrainHooks::default())
}

/// Like [`train`], for visible data given as real matrices (binary or
/// probabilities clamped as expected values), with hooks.
pub fn train_arrays(
    data: &[Array2<f64>],
    shape: LayerShape,
    cfg: &TrainConfig,
    hooks: TrainHooks<'_, MvrbmParams>,
) -> Result<(MvrbmParams, Vec<EpochReport>)> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    let init = MvrbmParams::random(shape, &mut rng);
    train_model(init, data, cfg, &mut rng, hooks)
}

/// Free-parameter counts `(mvrbm, classic)` for a layer shape:
/// `I·K + L·J + I·J + K·L` against `I·J·K·L + I·J + K·L`.
pub fn param_count(shape: LayerShape) -> (usize, usize) {
    let (i, j) = shape.visible;
    let (k, l) = shape.hidden;
    (i * k + l * j + i * j + k * l, i * j * k * l + i * j + k * l)
}
