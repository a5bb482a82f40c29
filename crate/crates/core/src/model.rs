//! Parameters, energy and conditionals of the matrix-variate RBM.
//!
//! The joint distribution over a binary visible matrix `X` (I×J) and a binary
//! hidden matrix `Y` (K×L) is `p(X, Y) ∝ exp(−E(X, Y))` with
//!
//! ```text
//! E(X, Y) = −tr(Uᵀ Y V Xᵀ) − tr(Xᵀ B) − tr(Yᵀ C)
//! ```
//!
//! where `U` is K×I and `V` is L×J. The four-way weight `w_ijkl = u_ki·v_lj`
//! is never materialised outside of [`expand_weight_tensor`], which exists for
//! tests.
//!
//! Vectorisation is column-major throughout: `vec(X)[i + j·I] = x_ij`.

use ndarray::{Array1, Array2, Array4, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Standard deviation of the Gaussian used for `U` and `V` at initialisation.
pub const INIT_STD: f64 = 0.1;

const SIGMOID_HI: f64 = 1.0 - f64::EPSILON / 2.0;
const SIGMOID_LO: f64 = f64::MIN_POSITIVE;

/// Logistic function, evaluated in the branch form that never overflows.
///
/// The result saturates at the representable values nearest to 0 and 1, so
/// it stays strictly inside the open unit interval for every finite input.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(SIGMOID_LO, SIGMOID_HI)
}

/// Anything that can be read as a real matrix: binary states, activations or
/// raw arrays.
pub trait Matrix {
    fn values(&self) -> &Array2<f64>;

    fn dims(&self) -> (usize, usize) {
        self.values().dim()
    }
}

impl Matrix for Array2<f64> {
    fn values(&self) -> &Array2<f64> {
        self
    }
}

/// A matrix with every entry in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix(Array2<f64>);

impl BinaryMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        check_nonempty(&values)?;
        if let Some(v) = values.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidValue(format!("binary matrix entry {v} is not 0 or 1")));
        }
        Ok(Self(values))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Array2::zeros((rows, cols)))
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self(Array2::ones((rows, cols)))
    }

    /// Builds a matrix from the low `rows·cols` bits of `state`; bit `p` is
    /// entry `(p / cols, p % cols)` (row-major, least significant bit first).
    pub fn from_state(rows: usize, cols: usize, state: u64) -> Self {
        Self(Array2::from_shape_fn((rows, cols), |(i, j)| ((state >> (i * cols + j)) & 1) as f64))
    }

    /// Inverse of [`BinaryMatrix::from_state`].
    pub fn state(&self) -> u64 {
        self.0.iter().enumerate().fold(0, |acc, (p, &v)| acc | (u64::from(v == 1.0) << p))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Matrix for BinaryMatrix {
    fn values(&self) -> &Array2<f64> {
        &self.0
    }
}

/// A matrix of Bernoulli probabilities (mean-field activations).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix(Array2<f64>);

impl ActivationMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        check_nonempty(&values)?;
        if let Some(v) = values.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidValue(format!("activation {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    /// Wraps values the caller guarantees are in `[0, 1]` (sigmoid outputs).
    pub(crate) fn from_probabilities(values: Array2<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self(values)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Matrix for ActivationMatrix {
    fn values(&self) -> &Array2<f64> {
        &self.0
    }
}

fn check_nonempty(values: &Array2<f64>) -> Result<()> {
    if values.nrows() == 0 || values.ncols() == 0 {
        return Err(Error::InvalidValue(format!(
            "matrix must be at least 1x1, got {}x{}",
            values.nrows(),
            values.ncols()
        )));
    }
    Ok(())
}

/// Visible `(I, J)` and hidden `(K, L)` layer dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub visible: (usize, usize),
    pub hidden: (usize, usize),
}

impl LayerShape {
    pub fn new(visible: (usize, usize), hidden: (usize, usize)) -> Result<Self> {
        if visible.0 == 0 || visible.1 == 0 || hidden.0 == 0 || hidden.1 == 0 {
            return Err(Error::Config(format!(
                "layer dimensions must be positive, got visible {}x{} hidden {}x{}",
                visible.0, visible.1, hidden.0, hidden.1
            )));
        }
        Ok(Self { visible, hidden })
    }

    pub fn visible_len(&self) -> usize {
        self.visible.0 * self.visible.1
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden.0 * self.hidden.1
    }
}

/// `Θ = {U, V, B, C}` with `U: K×I`, `V: L×J`, `B: I×J`, `C: K×L`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvrbmParams {
    pub(crate) u: Array2<f64>,
    pub(crate) v: Array2<f64>,
    pub(crate) b: Array2<f64>,
    pub(crate) c: Array2<f64>,
}

impl MvrbmParams {
    pub fn new(u: Array2<f64>, v: Array2<f64>, b: Array2<f64>, c: Array2<f64>) -> Result<Self> {
        let (k, i) = u.dim();
        let (l, j) = v.dim();
        if b.dim() != (i, j) {
            return Err(Error::dims("B", (i, j), b.dim()));
        }
        if c.dim() != (k, l) {
            return Err(Error::dims("C", (k, l), c.dim()));
        }
        let params = Self { u, v, b, c };
        params.shape()?;
        if !params.is_finite() {
            return Err(Error::InvalidValue("parameters contain NaN or infinity".into()));
        }
        Ok(params)
    }

    /// All-zero parameters: the uniform distribution over states.
    pub fn zeros(shape: LayerShape) -> Self {
        let (i, j) = shape.visible;
        let (k, l) = shape.hidden;
        Self { u: Array2::zeros((k, i)), v: Array2::zeros((l, j)), b: Array2::zeros((i, j)), c: Array2::zeros((k, l)) }
    }

    /// Gaussian `U`, `V` (mean 0, std [`INIT_STD`]) with zero biases.
    ///
    /// Draws `U` in row-major order, then `V`.
    pub fn random(shape: LayerShape, rng: &mut StreamRng) -> Self {
        let mut params = Self::zeros(shape);
        gaussian_fill(&mut params.u, INIT_STD, rng);
        gaussian_fill(&mut params.v, INIT_STD, rng);
        params
    }

    pub fn shape(&self) -> Result<LayerShape> {
        let (k, i) = self.u.dim();
        let (l, j) = self.v.dim();
        LayerShape::new((i, j), (k, l))
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn visible_dims(&self) -> (usize, usize) {
        (self.u.ncols(), self.v.ncols())
    }

    pub fn hidden_dims(&self) -> (usize, usize) {
        (self.u.nrows(), self.v.nrows())
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.v, &self.b, &self.c].iter().all(|m| m.iter().all(|x| x.is_finite()))
    }

    fn check_visible(&self, x: &Array2<f64>) -> Result<()> {
        if x.dim() != self.visible_dims() {
            return Err(Error::dims("visible X", self.visible_dims(), x.dim()));
        }
        Ok(())
    }

    fn check_hidden(&self, y: &Array2<f64>) -> Result<()> {
        if y.dim() != self.hidden_dims() {
            return Err(Error::dims("hidden Y", self.hidden_dims(), y.dim()));
        }
        Ok(())
    }

    /// `U X Vᵀ + C`, the hidden pre-activation.
    pub(crate) fn hidden_input(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut pre = self.u.dot(&x).dot(&self.v.t());
        pre += &self.c;
        pre
    }

    /// `Uᵀ Y V + B`, the visible pre-activation.
    pub(crate) fn visible_input(&self, y: ArrayView2<f64>) -> Array2<f64> {
        let mut pre = self.u.t().dot(&y).dot(&self.v);
        pre += &self.b;
        pre
    }
}

pub(crate) fn gaussian_fill(m: &mut Array2<f64>, std: f64, rng: &mut StreamRng) {
    let normal = Normal::new(0.0, std).expect("positive standard deviation");
    for x in m.iter_mut() {
        *x = normal.sample(rng);
    }
}

/// `E(X, Y) = −tr(Uᵀ Y V Xᵀ) − tr(Xᵀ B) − tr(Yᵀ C)`.
pub fn energy(x: &impl Matrix, y: &impl Matrix, params: &MvrbmParams) -> Result<f64> {
    let (x, y) = (x.values(), y.values());
    params.check_visible(x)?;
    params.check_hidden(y)?;
    let interaction = params.u.t().dot(y).dot(&params.v);
    let coupling = (&interaction * x).sum();
    let visible_bias = (x * &params.b).sum();
    let hidden_bias = (y * &params.c).sum();
    Ok(-coupling - visible_bias - hidden_bias)
}

/// Energy under an unfactored four-way weight `w[i, j, k, l]`:
/// `−Σ x_ij w_ijkl y_kl − Σ x_ij b_ij − Σ y_kl c_kl`.
pub fn full_tensor_energy(
    x: &impl Matrix,
    y: &impl Matrix,
    w: &Array4<f64>,
    b: &Array2<f64>,
    c: &Array2<f64>,
) -> Result<f64> {
    let (x, y) = (x.values(), y.values());
    let (i_n, j_n, k_n, l_n) = w.dim();
    if x.dim() != (i_n, j_n) {
        return Err(Error::dims("visible X", (i_n, j_n), x.dim()));
    }
    if y.dim() != (k_n, l_n) {
        return Err(Error::dims("hidden Y", (k_n, l_n), y.dim()));
    }
    if b.dim() != (i_n, j_n) {
        return Err(Error::dims("B", (i_n, j_n), b.dim()));
    }
    if c.dim() != (k_n, l_n) {
        return Err(Error::dims("C", (k_n, l_n), c.dim()));
    }
    let mut coupling = 0.0;
    for ((i, j, k, l), &wv) in w.indexed_iter() {
        coupling += x[(i, j)] * wv * y[(k, l)];
    }
    Ok(-coupling - (x * b).sum() - (y * c).sum())
}

/// The four-way tensor `w_ijkl = u_ki·v_lj` implied by the factors.
pub fn expand_weight_tensor(params: &MvrbmParams) -> Array4<f64> {
    let (i_n, j_n) = params.visible_dims();
    let (k_n, l_n) = params.hidden_dims();
    Array4::from_shape_fn((i_n, j_n, k_n, l_n), |(i, j, k, l)| params.u[(k, i)] * params.v[(l, j)])
}

/// `p(X = 1 | Y) = σ(Uᵀ Y V + B)`.
pub fn visible_activation(y: &impl Matrix, params: &MvrbmParams) -> Result<ActivationMatrix> {
    let y = y.values();
    params.check_hidden(y)?;
    Ok(ActivationMatrix::from_probabilities(params.visible_input(y.view()).mapv(sigmoid)))
}

/// `p(Y = 1 | X) = σ(U X Vᵀ + C)`.
///
/// `X` may be binary or a matrix of probabilities (mean-field input).
pub fn hidden_activation(x: &impl Matrix, params: &MvrbmParams) -> Result<ActivationMatrix> {
    let x = x.values();
    params.check_visible(x)?;
    Ok(ActivationMatrix::from_probabilities(params.hidden_input(x.view()).mapv(sigmoid)))
}

/// Independent Bernoulli draws, one uniform per entry in row-major order.
///
/// An entry is 1 when its uniform draw in `[0, 1)` is below the activation.
pub fn sample_bernoulli(act: &ActivationMatrix, rng: &mut StreamRng) -> BinaryMatrix {
    BinaryMatrix(bernoulli_array(&act.0, rng))
}

pub(crate) fn bernoulli_array(p: &Array2<f64>, rng: &mut StreamRng) -> Array2<f64> {
    let draws: Vec<f64> = p.iter().map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect();
    Array2::from_shape_vec(p.dim(), draws).expect("shape preserved")
}

/// One sweep of the Gibbs chain: `Y ~ p(Y | X)` then `X' ~ p(X | Y)`.
pub fn gibbs_step(x: &impl Matrix, params: &MvrbmParams, rng: &mut StreamRng) -> Result<(BinaryMatrix, BinaryMatrix)> {
    let y = sample_bernoulli(&hidden_activation(x, params)?, rng);
    let x_next = sample_bernoulli(&visible_activation(&y, params)?, rng);
    Ok((y, x_next))
}

/// Column-major vectorisation, `out[i + j·rows] = m[i, j]`.
pub fn vec_col_major(m: &Array2<f64>) -> Array1<f64> {
    m.t().iter().copied().collect()
}

/// Inverse of [`vec_col_major`].
pub fn unvec_col_major(v: &Array1<f64>, rows: usize, cols: usize) -> Result<Array2<f64>> {
    if v.len() != rows * cols {
        return Err(Error::dims("vector", (rows * cols, 1), (v.len(), 1)));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| v[i + j * rows]))
}

/// The (I·J)×(K·L) weight of the equivalent classic RBM, `W = Vᵀ ⊗ Uᵀ`.
///
/// With column-major `vec`, `vec(X)ᵀ W vec(Y) = tr(Uᵀ Y V Xᵀ)` for all `X, Y`:
/// entry `W[i + j·I, k + l·K] = u_ki·v_lj`.
pub fn kron_weight(params: &MvrbmParams) -> Array2<f64> {
    let (i_n, j_n) = params.visible_dims();
    let (k_n, l_n) = params.hidden_dims();
    let mut w = Array2::zeros((i_n * j_n, k_n * l_n));
    for j in 0..j_n {
        for i in 0..i_n {
            for l in 0..l_n {
                for k in 0..k_n {
                    w[(i + j * i_n, k + l * k_n)] = params.u[(k, i)] * params.v[(l, j)];
                }
            }
        }
    }
    w
}
