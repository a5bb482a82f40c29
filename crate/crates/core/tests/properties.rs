mod common;

use common::props::*;
use mvrbm::eval::psnr_from_rmse;
use proptest::prelude::*;

proptest! {
    #[test]
    fn sigmoid_range(x in -1e300f64..1e300) {
        sigmoid_in_open_unit_interval(x)?;
    }

    #[test]
    fn sigmoid_range_near_zero(x in -50.0f64..50.0) {
        sigmoid_in_open_unit_interval(x)?;
    }

    #[test]
    fn activation_range(seed in any::<u64>(), scale in 0.01f64..500.0) {
        activations_in_open_unit_interval(seed, scale)?;
    }

    #[test]
    fn channel_additivity(seed in any::<u64>(), which in 0usize..2) {
        channel_zeroing_is_additive(seed, which)?;
    }

    #[test]
    fn factor_rescaling_leaves_energy_unchanged(seed in any::<u64>(), s in prop_oneof![0.05f64..20.0, -20.0f64..-0.05]) {
        energy_scale_invariant(seed, s)?;
    }

    #[test]
    fn l1_metric_axioms(seed in any::<u64>()) {
        reconstruction_error_is_a_metric(seed)?;
    }

    #[test]
    fn psnr_back_solves_and_is_monotone(rmse in 1e-6f64..255.0, extra in 1e-3f64..10.0) {
        psnr_consistent_with_rmse(rmse, extra)?;
    }

    #[test]
    fn psnr_direct(seed in any::<u64>()) {
        psnr_matches_a_direct_computation(seed)?;
    }

    #[test]
    fn idx_files_round_trip(
        (rows, cols, bytes) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(any::<u8>(), r * c..=4 * r * c))),
        labels in prop::collection::vec(0u8..10, 0..20),
    ) {
        idx_round_trip(rows, cols, bytes, labels)?;
    }

    #[test]
    fn pgm_files_round_trip(
        (rows, cols, bytes) in (1usize..9, 1usize..9).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(any::<u8>(), r * c))),
    ) {
        pgm_round_trip(rows, cols, bytes)?;
    }

    #[test]
    fn artifacts_round_trip_and_detect_corruption(kind in 0usize..3, seed in any::<u64>(), pos in any::<usize>(), flip in any::<u8>()) {
        artifact_round_trip(kind, seed, pos, flip)?;
    }

    #[test]
    fn knn_is_permutation_covariant(seed in 0u64..1000, k in 1usize..5) {
        knn_permutation_covariant(seed, k)?;
    }
}

#[test]
fn published_bicubic_pair_is_self_consistent() {
    assert!((psnr_from_rmse(5.0134) - 34.1282).abs() < 1e-3);
    assert!((psnr_from_rmse(4.3804) - 35.3006).abs() < 1e-3);
}
