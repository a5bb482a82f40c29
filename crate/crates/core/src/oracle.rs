//! Exact inference on tiny models by enumerating every joint state.
//!
//! States are indexed as `x_state · 2^H + y_state`, where `x_state` packs the
//! visible bits and `y_state` the hidden bits, each row-major with the least
//! significant bit first (see [`BinaryMatrix::from_state`]). For multimodal
//! models the visible bits are the channels concatenated in channel order.
//!
//! Everything is computed in the log domain, so the cap of 2^20 states is a
//! runtime limit, not a numerical one.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{self, BinaryMatrix, Matrix, MvrbmParams};
use crate::multimodal::{self, MultimodalGradient, MultimodalParams};
use crate::rng::StreamRng;
use crate::trainer::{self, GradientIncrement};

pub const MAX_STATE_BITS: usize = 20;

/// Fully enumerated joint distribution.
#[derive(Debug, Clone)]
pub struct ExactModel {
    visible_bits: usize,
    hidden_bits: usize,
    /// `−E(s)` for every joint state `s`.
    log_weights: Vec<f64>,
    log_z: f64,
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl ExactModel {
    /// Enumerates an arbitrary bipartite energy given as a function of the
    /// packed visible and hidden states.
    pub fn from_energy(visible_bits: usize, hidden_bits: usize, energy: impl Fn(u64, u64) -> f64) -> Result<Self> {
        let bits = visible_bits + hidden_bits;
        if bits > MAX_STATE_BITS {
            return Err(Error::StateSpace { bits, max: MAX_STATE_BITS });
        }
        let mut log_weights = Vec::with_capacity(1 << bits);
        for xs in 0..(1u64 << visible_bits) {
            for ys in 0..(1u64 << hidden_bits) {
                log_weights.push(-energy(xs, ys));
            }
        }
        let log_z = log_sum_exp(log_weights.iter().copied());
        Ok(Self { visible_bits, hidden_bits, log_weights, log_z })
    }

    pub fn visible_bits(&self) -> usize {
        self.visible_bits
    }

    pub fn hidden_bits(&self) -> usize {
        self.hidden_bits
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    fn index(&self, xs: u64, ys: u64) -> usize {
        ((xs << self.hidden_bits) | ys) as usize
    }

    /// `p(X, Y)`.
    pub fn joint(&self, xs: u64, ys: u64) -> f64 {
        (self.log_weights[self.index(xs, ys)] - self.log_z).exp()
    }

    /// Sum of all joint probabilities (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.log_weights.iter().map(|lw| (lw - self.log_z).exp()).sum()
    }

    /// `log Σ_Y exp(−E(X, Y))`.
    pub fn log_unnormalized_visible(&self, xs: u64) -> f64 {
        let start = self.index(xs, 0);
        log_sum_exp(self.log_weights[start..start + (1 << self.hidden_bits)].iter().copied())
    }

    /// `log p(X)`.
    pub fn log_visible_marginal(&self, xs: u64) -> f64 {
        self.log_unnormalized_visible(xs) - self.log_z
    }

    /// `p(X)` for every visible state.
    pub fn visible_marginal(&self) -> Vec<f64> {
        (0..(1u64 << self.visible_bits)).map(|xs| self.log_visible_marginal(xs).exp()).collect()
    }

    /// `p(Y)` for every hidden state.
    pub fn hidden_marginal(&self) -> Vec<f64> {
        (0..(1u64 << self.hidden_bits))
            .map(|ys| {
                let lws = (0..(1u64 << self.visible_bits)).map(|xs| self.log_weights[self.index(xs, ys)]);
                (log_sum_exp(lws) - self.log_z).exp()
            })
            .collect()
    }

    /// `p(Y | X)` for every hidden state.
    pub fn hidden_posterior(&self, xs: u64) -> Vec<f64> {
        let norm = self.log_unnormalized_visible(xs);
        (0..(1u64 << self.hidden_bits)).map(|ys| (self.log_weights[self.index(xs, ys)] - norm).exp()).collect()
    }

    /// `p(X | Y)` for every visible state.
    pub fn visible_posterior(&self, ys: u64) -> Vec<f64> {
        let lws: Vec<f64> = (0..(1u64 << self.visible_bits)).map(|xs| self.log_weights[self.index(xs, ys)]).collect();
        let norm = log_sum_exp(lws.iter().copied());
        lws.iter().map(|lw| (lw - norm).exp()).collect()
    }

    /// `p(bit = 1 | X)` for every hidden bit, by summing the posterior.
    pub fn hidden_bit_conditionals(&self, xs: u64) -> Vec<f64> {
        bit_marginals(&self.hidden_posterior(xs), self.hidden_bits)
    }

    /// `p(bit = 1 | Y)` for every visible bit, by summing the posterior.
    pub fn visible_bit_conditionals(&self, ys: u64) -> Vec<f64> {
        bit_marginals(&self.visible_posterior(ys), self.visible_bits)
    }

    /// Draws a visible state exactly from `p(X)` with one uniform draw.
    pub fn sample_visible(&self, rng: &mut StreamRng) -> u64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let marginal = self.visible_marginal();
        for (xs, p) in marginal.iter().enumerate() {
            acc += p;
            if u < acc {
                return xs as u64;
            }
        }
        (marginal.len() - 1) as u64
    }

    /// Exact `ℓ = (1/N) Σₙ log p(Xₙ)` for packed visible states.
    pub fn log_likelihood(&self, data: &[u64]) -> f64 {
        data.iter().map(|&xs| self.log_visible_marginal(xs)).sum::<f64>() / data.len() as f64
    }
}

fn bit_marginals(probs: &[f64], bits: usize) -> Vec<f64> {
    (0..bits).map(|b| probs.iter().enumerate().filter(|(s, _)| (s >> b) & 1 == 1).map(|(_, p)| p).sum()).collect()
}

/// Enumerates the MVRBM joint distribution.
pub fn enumerate(params: &MvrbmParams) -> Result<ExactModel> {
    let (i, j) = params.visible_dims();
    let (k, l) = params.hidden_dims();
    check_bits(i * j + k * l)?;
    let xs_cache: Vec<BinaryMatrix> = (0..(1u64 << (i * j))).map(|s| BinaryMatrix::from_state(i, j, s)).collect();
    let ys_cache: Vec<BinaryMatrix> = (0..(1u64 << (k * l))).map(|s| BinaryMatrix::from_state(k, l, s)).collect();
    ExactModel::from_energy(i * j, k * l, |xs, ys| {
        model::energy(&xs_cache[xs as usize], &ys_cache[ys as usize], params).expect("shapes from params")
    })
}

fn check_bits(bits: usize) -> Result<()> {
    if bits > MAX_STATE_BITS {
        return Err(Error::StateSpace { bits, max: MAX_STATE_BITS });
    }
    Ok(())
}

fn pack(data: &[BinaryMatrix], dims: (usize, usize)) -> Result<Vec<u64>> {
    data.iter()
        .map(|x| {
            if x.dims() != dims {
                return Err(Error::dims("data sample", dims, x.dims()));
            }
            Ok(x.state())
        })
        .collect()
}

/// Exact log-likelihood of binary data under an MVRBM.
pub fn exact_log_likelihood(data: &[BinaryMatrix], params: &MvrbmParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    let exact = enumerate(params)?;
    Ok(exact.log_likelihood(&pack(data, params.visible_dims())?))
}

/// Exact `∂ℓ/∂θ` as data expectation minus model expectation of `−∂E/∂θ`.
///
/// Positive values increase the likelihood. Both expectations are sums over
/// the enumerated distribution with binary hidden states.
pub fn exact_loglik_gradient(data: &[BinaryMatrix], params: &MvrbmParams) -> Result<GradientIncrement> {
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    let exact = enumerate(params)?;
    let (i, j) = params.visible_dims();
    let (k, l) = params.hidden_dims();
    let packed = pack(data, (i, j))?;
    let stats = |xs: u64, ys: u64| {
        let x = BinaryMatrix::from_state(i, j, xs).into_inner();
        let y = BinaryMatrix::from_state(k, l, ys).into_inner();
        trainer::phase_statistics(&x, &y, params)
    };
    let mut grad = GradientIncrement::zeros_like(params);
    let n = packed.len() as f64;
    for &xs in &packed {
        for (ys, p) in exact.hidden_posterior(xs).into_iter().enumerate() {
            add_scaled(&mut grad, &stats(xs, ys as u64), p / n);
        }
    }
    for xs in 0..(1u64 << (i * j)) {
        for ys in 0..(1u64 << (k * l)) {
            add_scaled(&mut grad, &stats(xs, ys), -exact.joint(xs, ys));
        }
    }
    Ok(grad)
}

fn add_scaled(acc: &mut GradientIncrement, g: &GradientIncrement, w: f64) {
    acc.du.scaled_add(w, &g.du);
    acc.dv.scaled_add(w, &g.dv);
    acc.db.scaled_add(w, &g.db);
    acc.dc.scaled_add(w, &g.dc);
}

/// Channel matrices of a multimodal visible state packed into one integer;
/// channel 0 occupies the lowest bits.
pub fn unpack_channels(state: u64, dims: &[(usize, usize)]) -> Vec<Array2<f64>> {
    let mut offset = 0;
    dims.iter()
        .map(|&(r, c)| {
            let m = BinaryMatrix::from_state(r, c, state >> offset).into_inner();
            offset += r * c;
            m
        })
        .collect()
}

pub fn pack_channels(channels: &[Array2<f64>]) -> u64 {
    let mut offset = 0;
    let mut state = 0;
    for ch in channels {
        let bits = BinaryMatrix::new(ch.clone()).expect("binary channel").state();
        state |= bits << offset;
        offset += ch.len();
    }
    state
}

/// Enumerates the multimodal joint over all channels and the hidden matrix.
pub fn enumerate_multimodal(params: &MultimodalParams) -> Result<ExactModel> {
    let dims = params.channel_dims();
    let vbits: usize = dims.iter().map(|(r, c)| r * c).sum();
    let (k, l) = params.hidden_dims();
    check_bits(vbits + k * l)?;
    let xs_cache: Vec<Vec<Array2<f64>>> = (0..(1u64 << vbits)).map(|s| unpack_channels(s, &dims)).collect();
    let ys_cache: Vec<Array2<f64>> =
        (0..(1u64 << (k * l))).map(|s| BinaryMatrix::from_state(k, l, s).into_inner()).collect();
    ExactModel::from_energy(vbits, k * l, |xs, ys| {
        multimodal::mm_energy_channels(&xs_cache[xs as usize], &ys_cache[ys as usize], params)
            .expect("shapes from params")
    })
}

/// Exact log-likelihood of binary multimodal data (each sample a channel list).
pub fn exact_log_likelihood_multimodal(data: &[Vec<Array2<f64>>], params: &MultimodalParams) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    let exact = enumerate_multimodal(params)?;
    let packed: Vec<u64> = data.iter().map(|s| pack_channels(s)).collect();
    Ok(exact.log_likelihood(&packed))
}

/// Exact multimodal log-likelihood gradient, data minus model expectation.
pub fn exact_loglik_gradient_multimodal(
    data: &[Vec<Array2<f64>>],
    params: &MultimodalParams,
) -> Result<MultimodalGradient> {
    if data.is_empty() {
        return Err(Error::Empty("data"));
    }
    let exact = enumerate_multimodal(params)?;
    let dims = params.channel_dims();
    let (k, l) = params.hidden_dims();
    let stats = |xs: u64, ys: u64| {
        let v = unpack_channels(xs, &dims);
        let y = BinaryMatrix::from_state(k, l, ys).into_inner();
        multimodal::mm_phase_statistics(&v, &y, params)
    };
    let mut grad = MultimodalGradient::zeros_like(params);
    let n = data.len() as f64;
    for sample in data {
        let xs = pack_channels(sample);
        for (ys, p) in exact.hidden_posterior(xs).into_iter().enumerate() {
            grad.add_scaled(&stats(xs, ys as u64), p / n);
        }
    }
    for xs in 0..(1u64 << exact.visible_bits()) {
        for ys in 0..(1u64 << (k * l)) {
            grad.add_scaled(&stats(xs, ys), -exact.joint(xs, ys));
        }
    }
    Ok(grad)
}
