//! Test-side reference computations, written from the definitions without
//! going through the library's model code.

#![allow(dead_code)]

use std::path::PathBuf;

use mvrbm::multimodal::{Channel, MultimodalParams, MultimodalShape};
use mvrbm::{LayerShape, MvrbmParams, StreamRng};
use ndarray::Array2;
use rand::Rng;

pub fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut StreamRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// Every tensor (biases included) drawn from `U(-scale, scale)`.
pub fn random_params(shape: LayerShape, scale: f64, rng: &mut StreamRng) -> MvrbmParams {
    let ((i, j), (k, l)) = (shape.visible, shape.hidden);
    MvrbmParams::new(
        uniform(k, i, scale, rng),
        uniform(l, j, scale, rng),
        uniform(i, j, scale, rng),
        uniform(k, l, scale, rng),
    )
    .unwrap()
}

pub fn random_multimodal(shape: &MultimodalShape, scale: f64, rng: &mut StreamRng) -> MultimodalParams {
    let (k, l) = shape.hidden;
    let channels = shape
        .channels
        .iter()
        .map(|&(r, c)| Channel {
            left: uniform(k, r, scale, rng),
            right: uniform(l, c, scale, rng),
            bias: uniform(r, c, scale, rng),
        })
        .collect();
    MultimodalParams::new(channels, uniform(k, l, scale, rng)).unwrap()
}

/// Row-major, least significant bit first.
pub fn bits(rows: usize, cols: usize, state: u64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(r, c)| ((state >> (r * cols + c)) & 1) as f64)
}

/// `Σ_kl y_kl Σ_ij u_ki x_ij v_lj`, by explicit loops.
pub fn bilinear(x: &Array2<f64>, y: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>) -> f64 {
    let ((i_n, j_n), (k_n, l_n)) = (x.dim(), y.dim());
    let mut s = 0.0;
    for k in 0..k_n {
        for l in 0..l_n {
            for i in 0..i_n {
                for j in 0..j_n {
                    s += y[(k, l)] * u[(k, i)] * x[(i, j)] * v[(l, j)];
                }
            }
        }
    }
    s
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn brute_energy(x: &Array2<f64>, y: &Array2<f64>, p: &MvrbmParams) -> f64 {
    -bilinear(x, y, p.u(), p.v()) - dot(x, p.b()) - dot(y, p.c())
}

/// One channel's share of the multimodal energy, excluding `C`.
pub fn channel_energy(v: &Array2<f64>, y: &Array2<f64>, ch: &Channel) -> f64 {
    -bilinear(v, y, &ch.left, &ch.right) - dot(v, &ch.bias)
}

/// `p(y_kl = 1 | X)` by summing `exp(−E)` over every hidden state.
pub fn brute_hidden_conditionals(x: &Array2<f64>, p: &MvrbmParams) -> Array2<f64> {
    let (k, l) = p.hidden_dims();
    let mut num = Array2::<f64>::zeros((k, l));
    let mut z = 0.0;
    for ys in 0..(1u64 << (k * l)) {
        let y = bits(k, l, ys);
        let w = (-brute_energy(x, &y, p)).exp();
        z += w;
        num.scaled_add(w, &y);
    }
    num / z
}

/// `p(x_ij = 1 | Y)` by summing `exp(−E)` over every visible state.
pub fn brute_visible_conditionals(y: &Array2<f64>, p: &MvrbmParams) -> Array2<f64> {
    let (i, j) = p.visible_dims();
    let mut num = Array2::<f64>::zeros((i, j));
    let mut z = 0.0;
    for xs in 0..(1u64 << (i * j)) {
        let x = bits(i, j, xs);
        let w = (-brute_energy(&x, y, p)).exp();
        z += w;
        num.scaled_add(w, &x);
    }
    num / z
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// `|a − b| / max(|a|, |b|, 1e-3)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Central differences of `f` with respect to every entry of `m`.
pub fn central_difference(m: &Array2<f64>, h: f64, mut f: impl FnMut(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut out = Array2::zeros(m.dim());
    for idx in ndarray::indices(m.dim()) {
        let mut plus = m.clone();
        plus[idx] += h;
        let mut minus = m.clone();
        minus[idx] -= h;
        out[idx] = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    out
}

pub fn max_rel_err(analytic: &Array2<f64>, numeric: &Array2<f64>) -> f64 {
    analytic.iter().zip(numeric).map(|(&a, &n)| rel_err(a, n)).fold(0.0, f64::max)
}

/// Workspace data directory, overridable with `MVRBM_DATA_DIR`.
pub fn data_dir() -> PathBuf {
    std::env::var_os("MVRBM_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Mean exact log-likelihood for any energy over `vbits` visible and
/// `hbits` hidden bits; `data` holds packed visible states.
pub fn brute_log_likelihood(data: &[u64], vbits: usize, hbits: usize, energy: impl Fn(u64, u64) -> f64) -> f64 {
    let free: Vec<f64> = (0..(1u64 << vbits))
        .map(|xs| log_sum_exp(&(0..(1u64 << hbits)).map(|ys| -energy(xs, ys)).collect::<Vec<_>>()))
        .collect();
    let log_z = log_sum_exp(&free);
    data.iter().map(|&xs| free[xs as usize] - log_z).sum::<f64>() / data.len() as f64
}

pub fn mvrbm_log_likelihood(data: &[u64], p: &MvrbmParams) -> f64 {
    let ((i, j), (k, l)) = (p.visible_dims(), p.hidden_dims());
    brute_log_likelihood(data, i * j, k * l, |xs, ys| brute_energy(&bits(i, j, xs), &bits(k, l, ys), p))
}

/// Channel 0 in the lowest bits.
pub fn split_channels(state: u64, dims: &[(usize, usize)]) -> Vec<Array2<f64>> {
    let mut shift = 0;
    dims.iter()
        .map(|&(r, c)| {
            let m = bits(r, c, state >> shift);
            shift += r * c;
            m
        })
        .collect()
}

pub fn brute_mm_energy(v: &[Array2<f64>], y: &Array2<f64>, p: &MultimodalParams) -> f64 {
    v.iter().zip(p.channels()).map(|(x, ch)| channel_energy(x, y, ch)).sum::<f64>() - dot(y, p.hidden_bias())
}

pub fn mm_log_likelihood(data: &[u64], p: &MultimodalParams) -> f64 {
    let dims = p.channel_dims();
    let vbits = dims.iter().map(|(r, c)| r * c).sum();
    let (k, l) = p.hidden_dims();
    brute_log_likelihood(data, vbits, k * l, |xs, ys| brute_mm_energy(&split_channels(xs, &dims), &bits(k, l, ys), p))
}

const FD_STEP: f64 = 1e-5;

/// Worst relative error between the exact gradient and central differences
/// of the test-side log-likelihood, per tensor `[U, V, B, C]`.
pub fn mvrbm_gradient_errors(p: &MvrbmParams, data: &[u64]) -> [f64; 4] {
    let ((i, j), _) = (p.visible_dims(), p.hidden_dims());
    let binary: Vec<_> = data.iter().map(|&s| mvrbm::BinaryMatrix::new(bits(i, j, s)).unwrap()).collect();
    let g = mvrbm::oracle::exact_loglik_gradient(&binary, p).unwrap();
    let (u, v, b, c) = (p.u().clone(), p.v().clone(), p.b().clone(), p.c().clone());
    let ll = |u: &Array2<f64>, v: &Array2<f64>, b: &Array2<f64>, c: &Array2<f64>| {
        mvrbm_log_likelihood(data, &MvrbmParams::new(u.clone(), v.clone(), b.clone(), c.clone()).unwrap())
    };
    [
        max_rel_err(&g.du, &central_difference(&u, FD_STEP, |m| ll(m, &v, &b, &c))),
        max_rel_err(&g.dv, &central_difference(&v, FD_STEP, |m| ll(&u, m, &b, &c))),
        max_rel_err(&g.db, &central_difference(&b, FD_STEP, |m| ll(&u, &v, m, &c))),
        max_rel_err(&g.dc, &central_difference(&c, FD_STEP, |m| ll(&u, &v, &b, m))),
    ]
}

/// Same check for a multimodal model: one error per channel tensor
/// (left, right, bias for each channel in order), then `C`.
pub fn mm_gradient_errors(p: &MultimodalParams, data: &[u64]) -> Vec<f64> {
    let dims = p.channel_dims();
    let samples: Vec<_> = data.iter().map(|&s| split_channels(s, &dims)).collect();
    let g = mvrbm::oracle::exact_loglik_gradient_multimodal(&samples, p).unwrap();
    let rebuild = |edit: &dyn Fn(&mut Vec<Channel>, &mut Array2<f64>)| {
        let mut chans = p.channels().to_vec();
        let mut c = p.hidden_bias().clone();
        edit(&mut chans, &mut c);
        mm_log_likelihood(data, &MultimodalParams::new(chans, c).unwrap())
    };
    let mut out = Vec::new();
    for (e, ch) in p.channels().iter().enumerate() {
        let fd_left = central_difference(&ch.left, FD_STEP, |m| rebuild(&|cs, _| cs[e].left = m.clone()));
        let fd_right = central_difference(&ch.right, FD_STEP, |m| rebuild(&|cs, _| cs[e].right = m.clone()));
        let fd_bias = central_difference(&ch.bias, FD_STEP, |m| rebuild(&|cs, _| cs[e].bias = m.clone()));
        out.push(max_rel_err(&g.channels[e].left, &fd_left));
        out.push(max_rel_err(&g.channels[e].right, &fd_right));
        out.push(max_rel_err(&g.channels[e].bias, &fd_bias));
    }
    let fd_c = central_difference(p.hidden_bias(), FD_STEP, |m| rebuild(&|_, c| *c = m.clone()));
    out.push(max_rel_err(&g.dc, &fd_c));
    out
}
pub mod props;
