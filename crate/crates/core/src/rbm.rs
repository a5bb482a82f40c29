//! Classic vector RBM on vectorised images, used as the baseline.
//!
//! `W` is `(I·J)×(K·L)`, `p(y|x) = σ(Wᵀx + c)` and `p(x|y) = σ(W y + b)`.
//! Images enter through the column-major `vec`, so an MVRBM maps onto an
//! RBM with `W = Vᵀ ⊗ Uᵀ`, `b = vec(B)`, `c = vec(C)`.

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Zip};

use crate::error::{Error, Result};
use crate::model::{self, gaussian_fill, kron_weight, vec_col_major, MvrbmParams, INIT_STD};
use crate::rng::{seeded, StreamRng};
use crate::trainer::{self, CdModel, EpochReport, ParamSet, TrainConfig, TrainHooks};

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    pub(crate) w: Array2<f64>,
    pub(crate) b: Array1<f64>,
    pub(crate) c: Array1<f64>,
}

impl RbmParams {
    pub fn new(w: Array2<f64>, b: Array1<f64>, c: Array1<f64>) -> Result<Self> {
        let (n, m) = w.dim();
        if n == 0 || m == 0 {
            return Err(Error::Config("RBM layers must be nonempty".into()));
        }
        if b.len() != n {
            return Err(Error::dims("visible bias b", (n, 1), (b.len(), 1)));
        }
        if c.len() != m {
            return Err(Error::dims("hidden bias c", (m, 1), (c.len(), 1)));
        }
        if !w.iter().chain(&b).chain(&c).all(|x| x.is_finite()) {
            return Err(Error::InvalidValue("parameters contain NaN or infinity".into()));
        }
        Ok(Self { w, b, c })
    }

    pub fn zeros(visible: usize, hidden: usize) -> Result<Self> {
        Self::new(Array2::zeros((visible, hidden)), Array1::zeros(visible), Array1::zeros(hidden))
    }

    /// Gaussian weights (row-major draw order), zero biases.
    pub fn random(visible: usize, hidden: usize, rng: &mut StreamRng) -> Result<Self> {
        let mut p = Self::zeros(visible, hidden)?;
        gaussian_fill(&mut p.w, INIT_STD, rng);
        Ok(p)
    }

    /// The RBM with exactly the same joint distribution as `p`, under
    /// column-major vectorisation of both layers.
    pub fn from_mvrbm(p: &MvrbmParams) -> Self {
        Self { w: kron_weight(p), b: vec_col_major(p.b()), c: vec_col_major(p.c()) }
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    pub fn c(&self) -> &Array1<f64> {
        &self.c
    }

    pub fn visible_len(&self) -> usize {
        self.b.len()
    }

    pub fn hidden_len(&self) -> usize {
        self.c.len()
    }

    fn check_visible(&self, x: &Array1<f64>) -> Result<()> {
        if x.len() != self.visible_len() {
            return Err(Error::dims("visible x", (self.visible_len(), 1), (x.len(), 1)));
        }
        Ok(())
    }

    fn check_hidden(&self, y: &Array1<f64>) -> Result<()> {
        if y.len() != self.hidden_len() {
            return Err(Error::dims("hidden y", (self.hidden_len(), 1), (y.len(), 1)));
        }
        Ok(())
    }
}

/// `−xᵀ W y − bᵀx − cᵀy`.
pub fn rbm_energy(x: &Array1<f64>, y: &Array1<f64>, p: &RbmParams) -> Result<f64> {
    p.check_visible(x)?;
    p.check_hidden(y)?;
    Ok(-x.dot(&p.w.dot(y)) - p.b.dot(x) - p.c.dot(y))
}

/// `σ(Wᵀx + c)`.
pub fn rbm_hidden_activation(x: &Array1<f64>, p: &RbmParams) -> Result<Array1<f64>> {
    p.check_visible(x)?;
    Ok((p.w.t().dot(x) + &p.c).mapv(model::sigmoid))
}

/// `σ(W y + b)`.
pub fn rbm_visible_activation(y: &Array1<f64>, p: &RbmParams) -> Result<Array1<f64>> {
    p.check_hidden(y)?;
    Ok((p.w.dot(y) + &p.b).mapv(model::sigmoid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
    pub dc: Array1<f64>,
}

impl ParamSet for RbmParams {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        vec![self.w.view().into_dyn(), self.b.view().into_dyn(), self.c.view().into_dyn()]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![self.w.view_mut().into_dyn(), self.b.view_mut().into_dyn(), self.c.view_mut().into_dyn()]
    }
}

impl ParamSet for RbmGradient {
    fn tensors(&self) -> Vec<ArrayViewD<'_, f64>> {
        vec![self.dw.view().into_dyn(), self.db.view().into_dyn(), self.dc.view().into_dyn()]
    }

    fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, f64>> {
        vec![self.dw.view_mut().into_dyn(), self.db.view_mut().into_dyn(), self.dc.view_mut().into_dyn()]
    }
}

fn bernoulli_vec(p: &Array1<f64>, rng: &mut StreamRng) -> Array1<f64> {
    let m = p.view().into_shape_with_order((1, p.len())).expect("row view").to_owned();
    Array1::from_vec(model::bernoulli_array(&m, rng).into_raw_vec_and_offset().0)
}

impl CdModel for RbmParams {
    type Visible = Array1<f64>;
    type Hidden = Array1<f64>;
    type Grad = RbmGradient;

    fn zero_grad(&self) -> RbmGradient {
        RbmGradient {
            dw: Array2::zeros(self.w.dim()),
            db: Array1::zeros(self.b.len()),
            dc: Array1::zeros(self.c.len()),
        }
    }

    fn decayed(&self) -> Vec<bool> {
        vec![true, false, false]
    }

    fn check_visible(&self, v: &Array1<f64>) -> Result<()> {
        RbmParams::check_visible(self, v)
    }

    fn hidden_probs(&self, v: &Array1<f64>) -> Array1<f64> {
        (self.w.t().dot(v) + &self.c).mapv(model::sigmoid)
    }

    fn sample_hidden(&self, probs: &Array1<f64>, rng: &mut StreamRng) -> Array1<f64> {
        bernoulli_vec(probs, rng)
    }

    fn visible_probs(&self, h: &Array1<f64>) -> Array1<f64> {
        (self.w.dot(h) + &self.b).mapv(model::sigmoid)
    }

    fn sample_visible(&self, probs: &Array1<f64>, rng: &mut StreamRng) -> Array1<f64> {
        bernoulli_vec(probs, rng)
    }

    fn accumulate(&self, v: &Array1<f64>, h: &Array1<f64>, weight: f64, g: &mut RbmGradient) {
        Zip::from(g.dw.rows_mut()).and(v).for_each(|mut row, &xi| {
            if xi != 0.0 {
                row.scaled_add(weight * xi, h);
            }
        });
        g.db.scaled_add(weight, v);
        g.dc.scaled_add(weight, h);
    }

    fn reconstruction_mae(&self, data: &Array1<f64>, recon: &Array1<f64>) -> f64 {
        Zip::from(data).and(recon).fold(0.0, |acc, a, b| acc + (a - b).abs()) / data.len() as f64
    }

    fn telemetry_norms(g: &RbmGradient) -> [f64; 4] {
        let norm = |it: &mut dyn Iterator<Item = &f64>| it.map(|x| x * x).sum::<f64>().sqrt();
        [norm(&mut g.dw.iter()), 0.0, norm(&mut g.db.iter()), norm(&mut g.dc.iter())]
    }
}

/// Trains a classic RBM on vectorised images (`I·J` visible units,
/// `hidden` hidden units) with fresh parameters.
pub fn rbm_train(
    data: &[Array1<f64>],
    hidden: usize,
    cfg: &TrainConfig,
    hooks: TrainHooks<'_, RbmParams>,
) -> Result<(RbmParams, Vec<EpochReport>)> {
    cfg.validate()?;
    let visible = data.first().ok_or(Error::Empty("training set"))?.len();
    let mut rng = seeded(cfg.seed);
    let init = RbmParams::random(visible, hidden, &mut rng)?;
    trainer::train_model(init, data, cfg, &mut rng, hooks)
}
