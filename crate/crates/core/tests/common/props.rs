//! Property checks shared by the proptest suite and the acceptance runner.

use mvrbm::data::{
    parse_idx_images, parse_idx_labels, read_pnm, write_idx_images, write_idx_labels, write_pgm, ImageGray,
};
use mvrbm::eval::{knn_predict, psnr, psnr_from_rmse, reconstruction_error};
use mvrbm::model::{energy, hidden_activation, sigmoid, BinaryMatrix, Matrix};
use mvrbm::multimodal::{mm_energy_channels, MultimodalShape};
use mvrbm::persistence::{decode, encode, Model};
use mvrbm::rbm::RbmParams;
use mvrbm::{seeded, LayerShape, MvrbmParams};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{bits, brute_energy, channel_energy, random_multimodal, random_params, uniform};

type Check = Result<(), TestCaseError>;

pub fn sigmoid_in_open_unit_interval(x: f64) -> Check {
    let s = sigmoid(x);
    prop_assert!(s > 0.0 && s < 1.0, "sigmoid({x}) = {s}");
    prop_assert!((s + sigmoid(-x) - 1.0).abs() < 1e-12);
    Ok(())
}

pub fn activations_in_open_unit_interval(seed: u64, scale: f64) -> Check {
    let mut rng = seeded(seed);
    let p = random_params(LayerShape::new((3, 4), (2, 3)).unwrap(), scale, &mut rng);
    let x = BinaryMatrix::from_state(3, 4, seed);
    let h = hidden_activation(&x, &p).unwrap();
    prop_assert!(h.values().iter().all(|&v| v > 0.0 && v < 1.0));
    Ok(())
}

/// Zeroing one feature channel's factors and bias removes exactly its term.
pub fn channel_zeroing_is_additive(seed: u64, which: usize) -> Check {
    let mut rng = seeded(seed);
    let shape = MultimodalShape { channels: vec![(3, 2), (2, 2), (1, 3)], hidden: (2, 2) };
    let mut p = random_multimodal(&shape, 2.0, &mut rng);
    let e = 1 + which % 2;
    let v = super::split_channels(seed.wrapping_mul(2654435761) % (1 << 12), &p.channel_dims());
    let y = bits(2, 2, seed % 16);
    let full = mm_energy_channels(&v, &y, &p).unwrap();
    let term = channel_energy(&v[e], &y, &p.channels()[e]);
    let dims = p.channels()[e].dims();
    p.channels_mut()[e] = mvrbm::multimodal::Channel::zeros(dims, (2, 2));
    let reduced = mm_energy_channels(&v, &y, &p).unwrap();
    prop_assert!((full - (reduced + term)).abs() < 1e-12, "{full} vs {reduced} + {term}");
    Ok(())
}

pub fn energy_scale_invariant(seed: u64, s: f64) -> Check {
    let mut rng = seeded(seed);
    let p = random_params(LayerShape::new((3, 3), (2, 2)).unwrap(), 1.0, &mut rng);
    let q = MvrbmParams::new(p.u() * s, p.v() / s, p.b().clone(), p.c().clone()).unwrap();
    let x = BinaryMatrix::from_state(3, 3, seed % 512);
    let y = BinaryMatrix::from_state(2, 2, seed % 16);
    let (a, b) = (energy(&x, &y, &p).unwrap(), energy(&x, &y, &q).unwrap());
    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    prop_assert!((a - brute_energy(x.values(), y.values(), &p)).abs() < 1e-12);
    Ok(())
}

pub fn reconstruction_error_is_a_metric(seed: u64) -> Check {
    let mut rng = seeded(seed);
    let [a, b, c] = [0, 1, 2].map(|_| uniform(4, 3, 1.0, &mut rng));
    let d = |p: &Array2<f64>, q: &Array2<f64>| reconstruction_error(p, q).unwrap().total;
    prop_assert_eq!(d(&a, &a), 0.0);
    prop_assert!(d(&a, &b) > 0.0);
    prop_assert_eq!(d(&a, &b), d(&b, &a));
    prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    prop_assert!((reconstruction_error(&a, &b).unwrap().per_pixel * 12.0 - d(&a, &b)).abs() < 1e-12);
    Ok(())
}

/// PSNR is `20·log10(255/RMSE)`, so RMSE back-solves from it and larger
/// errors give lower PSNR.
pub fn psnr_consistent_with_rmse(rmse: f64, extra: f64) -> Check {
    let p = psnr_from_rmse(rmse);
    prop_assert!((255.0 * 10f64.powf(-p / 20.0) - rmse).abs() <= 1e-9 * rmse);
    prop_assert!(psnr_from_rmse(rmse + extra) < p);
    Ok(())
}

pub fn psnr_matches_a_direct_computation(seed: u64) -> Check {
    let mut rng = seeded(seed);
    let a = uniform(5, 6, 0.5, &mut rng).mapv(|v| v + 0.5);
    let b = uniform(5, 6, 0.5, &mut rng).mapv(|v| v + 0.5);
    let m = psnr(&a, &b).unwrap();
    let mse: f64 = a.iter().zip(&b).map(|(x, y)| ((x - y) * 255.0).powi(2)).sum::<f64>() / 30.0;
    prop_assert!((m.rmse - mse.sqrt()).abs() < 1e-9);
    prop_assert!((m.psnr - 10.0 * (255.0f64 * 255.0 / mse).log10()).abs() < 1e-9);
    Ok(())
}

fn image_from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> ImageGray {
    ImageGray::new(Array2::from_shape_fn((rows, cols), |(r, c)| f64::from(bytes[r * cols + c]) / 255.0)).unwrap()
}

pub fn idx_round_trip(rows: usize, cols: usize, bytes: Vec<u8>, labels: Vec<u8>) -> Check {
    let n = bytes.len() / (rows * cols);
    let images: Vec<_> = (0..n).map(|k| image_from_bytes(rows, cols, &bytes[k * rows * cols..])).collect();
    let encoded = write_idx_images(&images).unwrap();
    prop_assert_eq!(&encoded[16..], &bytes[..n * rows * cols]);
    prop_assert_eq!(parse_idx_images(&encoded).unwrap(), images);
    prop_assert_eq!(parse_idx_labels(&write_idx_labels(&labels)).unwrap(), labels);
    Ok(())
}

pub fn pgm_round_trip(rows: usize, cols: usize, bytes: Vec<u8>) -> Check {
    let img = image_from_bytes(rows, cols, &bytes);
    let encoded = write_pgm(&img);
    let back = read_pnm(&encoded).unwrap().into_gray();
    prop_assert_eq!(&back, &img);
    prop_assert_eq!(write_pgm(&back), encoded);
    Ok(())
}

fn sample_model(kind: usize, seed: u64) -> Model {
    let mut rng = seeded(seed);
    match kind % 3 {
        0 => Model::Mvrbm(random_params(LayerShape::new((3, 2), (2, 4)).unwrap(), 1.0, &mut rng)),
        1 => Model::Rbm(
            RbmParams::new(uniform(5, 3, 1.0, &mut rng), Array1::from_elem(5, 0.25), Array1::from_elem(3, -0.5))
                .unwrap(),
        ),
        _ => {
            let shape = MultimodalShape { channels: vec![(2, 3), (2, 3), (1, 2)], hidden: (2, 2) };
            Model::Multimodal(random_multimodal(&shape, 1.0, &mut rng))
        }
    }
}

/// Bit-exact round trip, and every single-byte corruption is rejected.
pub fn artifact_round_trip(kind: usize, seed: u64, position: usize, flip: u8) -> Check {
    let model = sample_model(kind, seed);
    let bytes = encode(&model).unwrap();
    let back = decode(&bytes).unwrap();
    prop_assert_eq!(&back, &model);
    prop_assert_eq!(encode(&back).unwrap(), bytes.clone());
    let mut bad = bytes.clone();
    let at = position % bad.len();
    bad[at] ^= flip.max(1);
    prop_assert!(decode(&bad).is_err(), "corruption at byte {at} accepted");
    Ok(())
}

/// Permuting the test set permutes the 1-NN predictions the same way.
pub fn knn_permutation_covariant(seed: u64, k: usize) -> Check {
    let mut rng = seeded(seed);
    let train: Vec<Array1<f64>> =
        (0..12).map(|_| uniform(1, 3, 1.0, &mut rng).into_shape_with_order(3).unwrap()).collect();
    let labels: Vec<u8> = (0..12).map(|i| (i % 4) as u8).collect();
    let test: Vec<Array1<f64>> =
        (0..7).map(|_| uniform(1, 3, 1.0, &mut rng).into_shape_with_order(3).unwrap()).collect();
    let base = knn_predict(&train, &labels, &test, k).unwrap();
    let perm: Vec<usize> = (0..7).map(|i| (i * 3 + seed as usize) % 7).collect();
    let shuffled: Vec<_> = perm.iter().map(|&i| test[i].clone()).collect();
    let out = knn_predict(&train, &labels, &shuffled, k).unwrap();
    for (pos, &i) in perm.iter().enumerate() {
        prop_assert_eq!(out[pos], base[i]);
    }
    prop_assert_eq!(knn_predict(&train, &labels, &test, k).unwrap(), base);
    Ok(())
}
