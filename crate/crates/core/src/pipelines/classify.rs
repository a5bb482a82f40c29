use ndarray::{Array1, Array2};

use crate::data::LabeledDataset;
use crate::error::Result;
use crate::eval::{hidden_features, knn_classify, Classification, MetricRow};
use crate::model::{vec_col_major, MvrbmParams};
use crate::rbm::{rbm_hidden_activation, RbmParams};

/// 1-NN over arbitrary per-image features.
pub fn classify_features(
    train: &[Array1<f64>],
    train_set: &LabeledDataset,
    test: &[Array1<f64>],
    test_set: &LabeledDataset,
) -> Result<Classification> {
    knn_classify(train, &train_set.labels, test, &test_set.labels, 1)
}

fn features(inputs: &[Array2<f64>], f: impl Fn(&Array2<f64>) -> Result<Array1<f64>>) -> Result<Vec<Array1<f64>>> {
    inputs.iter().map(f).collect()
}

/// 1-NN on mean-field hidden features. `train_inputs` and `test_inputs`
/// are the visible matrices fed to the model, aligned with the datasets.
pub fn classify_mvrbm(
    params: &MvrbmParams,
    train_inputs: &[Array2<f64>],
    train_set: &LabeledDataset,
    test_inputs: &[Array2<f64>],
    test_set: &LabeledDataset,
) -> Result<Classification> {
    let tr = features(train_inputs, |x| hidden_features(x, params))?;
    let te = features(test_inputs, |x| hidden_features(x, params))?;
    classify_features(&tr, train_set, &te, test_set)
}

pub fn classify_rbm(
    params: &RbmParams,
    train_inputs: &[Array2<f64>],
    train_set: &LabeledDataset,
    test_inputs: &[Array2<f64>],
    test_set: &LabeledDataset,
) -> Result<Classification> {
    let f = |x: &Array2<f64>| rbm_hidden_activation(&vec_col_major(x), params);
    classify_features(&features(train_inputs, f)?, train_set, &features(test_inputs, f)?, test_set)
}

/// 1-NN on the raw pixel intensities.
pub fn classify_raw(train_set: &LabeledDataset, test_set: &LabeledDataset) -> Result<Classification> {
    let f = |d: &LabeledDataset| d.images.iter().map(|i| vec_col_major(i.pixels())).collect::<Vec<_>>();
    classify_features(&f(train_set), train_set, &f(test_set), test_set)
}

/// Published MNIST 1-NN error rates for the MVRBM at full scale.
pub fn paper_classification_rows() -> Vec<MetricRow> {
    vec![
        MetricRow::paper("classify_n10000_t300", "error_rate", 0.0571),
        MetricRow::paper("classify_n10000_t3000", "error_rate", 0.0520),
        MetricRow::paper("classify_n50000", "error_rate", 0.0359),
        MetricRow::paper("classify_n600", "error_rate", 0.1387),
    ]
}
