//! Reconstruction and image-quality metrics, hidden features, 1-NN.

use std::fmt::Write as _;
use std::io::Write;

use ndarray::{Array1, Array2, Zip};

use crate::error::{Error, Result};
use crate::model::{hidden_activation, vec_col_major, Matrix, MvrbmParams};

/// Reconstruction error as an L1 distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconError {
    pub total: f64,
    pub per_pixel: f64,
}

pub fn reconstruction_error(original: &Array2<f64>, reconstructed: &Array2<f64>) -> Result<ReconError> {
    if original.dim() != reconstructed.dim() {
        return Err(Error::dims("reconstruction", original.dim(), reconstructed.dim()));
    }
    let total = Zip::from(original).and(reconstructed).fold(0.0, |acc, a, b| acc + (a - b).abs());
    Ok(ReconError { total, per_pixel: total / original.len() as f64 })
}

/// RMSE and PSNR on the 8-bit scale, plus per-pixel MAE on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rmse: f64,
    /// `f64::INFINITY` when the images are identical.
    pub psnr: f64,
    pub per_pixel_mae: f64,
}

pub const PEAK: f64 = 255.0;

pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (PEAK / rmse).log10()
    }
}

/// Compares images with values in `[0, 1]`.
pub fn psnr(reference: &Array2<f64>, test: &Array2<f64>) -> Result<Metrics> {
    if reference.dim() != test.dim() {
        return Err(Error::dims("test image", reference.dim(), test.dim()));
    }
    if reference.is_empty() {
        return Err(Error::Empty("image"));
    }
    let n = reference.len() as f64;
    let (sq, abs) = Zip::from(reference).and(test).fold((0.0, 0.0), |(sq, abs), a, b| {
        let d = (a - b) * PEAK;
        (sq + d * d, abs + (a - b).abs())
    });
    let rmse = (sq / n).sqrt();
    Ok(Metrics { rmse, psnr: psnr_from_rmse(rmse), per_pixel_mae: abs / n })
}

/// Column-major flattening of the mean-field hidden activation.
pub fn hidden_features(x: &impl Matrix, params: &MvrbmParams) -> Result<Array1<f64>> {
    Ok(vec_col_major(hidden_activation(x, params)?.values()))
}

/// Predicted labels and the fraction of them that are wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub predicted: Vec<u8>,
    pub error_rate: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

fn sq_dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + (x - y) * (x - y))
}

/// k-NN under Euclidean distance. Ties in distance go to the lower
/// training index; for `k > 1` the vote is a plurality, ties going to the
/// label whose nearest member ranks first.
pub fn knn_predict(train: &[Array1<f64>], labels: &[u8], test: &[Array1<f64>], k: usize) -> Result<Vec<u8>> {
    if train.is_empty() {
        return Err(Error::Empty("k-NN training set"));
    }
    if train.len() != labels.len() {
        return Err(Error::InvalidValue(format!("{} training points but {} labels", train.len(), labels.len())));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let dim = train[0].len();
    if let Some(bad) = train.iter().chain(test).find(|f| f.len() != dim) {
        return Err(Error::dims("feature vector", (dim, 1), (bad.len(), 1)));
    }
    let k = k.min(train.len());
    Ok(test
        .iter()
        .map(|t| {
            if k == 1 {
                let mut best = (f64::INFINITY, 0);
                for (i, f) in train.iter().enumerate() {
                    let d = sq_dist(t, f);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                return labels[best.1];
            }
            let mut ranked: Vec<(f64, usize)> = train.iter().enumerate().map(|(i, f)| (sq_dist(t, f), i)).collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = [0usize; 256];
            let mut first_rank = [usize::MAX; 256];
            for (rank, &(_, i)) in ranked[..k].iter().enumerate() {
                let l = labels[i] as usize;
                votes[l] += 1;
                first_rank[l] = first_rank[l].min(rank);
            }
            (0..256)
                .filter(|&l| votes[l] > 0)
                .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(first_rank[b].cmp(&first_rank[a])))
                .expect("k >= 1") as u8
        })
        .collect())
}

pub fn knn_classify(
    train: &[Array1<f64>],
    train_labels: &[u8],
    test: &[Array1<f64>],
    test_labels: &[u8],
    k: usize,
) -> Result<Classification> {
    if test.len() != test_labels.len() {
        return Err(Error::InvalidValue(format!("{} test points but {} labels", test.len(), test_labels.len())));
    }
    let predicted = knn_predict(train, train_labels, test, k)?;
    let classes = train_labels.iter().chain(test_labels).chain(&predicted).map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut confusion = vec![vec![0; classes]; classes];
    let mut wrong = 0;
    for (&p, &t) in predicted.iter().zip(test_labels) {
        confusion[t as usize][p as usize] += 1;
        wrong += usize::from(p != t);
    }
    let error_rate = if test.is_empty() { 0.0 } else { wrong as f64 / test.len() as f64 };
    Ok(Classification { predicted, error_rate, confusion })
}

pub const METRICS_HEADER: &str = "experiment_id,metric,value,source";

/// One metrics CSV row. `source` is `measured` for computed values and
/// `paper` for published reference numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub experiment: String,
    pub metric: String,
    pub value: f64,
    pub source: &'static str,
}

impl MetricRow {
    pub fn measured(experiment: &str, metric: &str, value: f64) -> Self {
        Self { experiment: experiment.into(), metric: metric.into(), value, source: "measured" }
    }

    pub fn paper(experiment: &str, metric: &str, value: f64) -> Self {
        Self { experiment: experiment.into(), metric: metric.into(), value, source: "paper" }
    }
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

pub fn render_metrics(rows: &[MetricRow]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.experiment, r.metric, format_value(r.value), r.source);
    }
    s
}

pub fn write_metrics(out: &mut impl Write, rows: &[MetricRow]) -> std::io::Result<()> {
    out.write_all(render_metrics(rows).as_bytes())
}
