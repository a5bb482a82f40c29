use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use mvrbm::data::{
    bicubic_resize, bicubic_resize_to, read_manifest, read_pnm_file, write_pgm_file, write_ppm, ycbcr_merge,
    ycbcr_split, ImageGray, LabeledDataset, Pnm,
};
use mvrbm::eval::{psnr, render_metrics, MetricRow};
use mvrbm::model::vec_col_major;
use mvrbm::persistence::{self, Model};
use mvrbm::pipelines::{
    classify_mvrbm, classify_raw, classify_rbm, denoise as run_denoise, filter_grid, load_mnist, mnist_inputs,
    paper_classification_rows, paper_superres_rows, select_training_set, super_resolve, train_superres, DenoiseConfig,
    MnistSplit, SrEncoding, SrModel, SrReport, SrTrainConfig, DEFAULT_CYCLES,
};
use mvrbm::rbm::rbm_train;
use mvrbm::trainer::{train_arrays, write_telemetry, EpochReport, TrainConfig, TrainHooks};
use mvrbm::{seeded, Error, LayerShape};

use crate::settings::{out_dir, CliError, CliResult, Settings, DATA};
use crate::{ClassifyArgs, DenoiseArgs, EvalArgs, FiltersArgs, SuperresArgs, TrainArgs, TrainFlags};

/// Gain below which a super-resolution run is flagged as under-trained.
const MIN_GAIN_DB: f64 = 0.1;

const TRAIN_KEYS: &[&str] = &[
    "out",
    "seed",
    "epochs",
    "learning_rate",
    "weight_decay",
    "momentum",
    "batch_size",
    "cd_steps",
    "mean_field_negative",
    "mnist",
    "threshold",
    "digit",
    "kind",
    "baseline",
    "n",
    "hidden",
    "manifest",
    "patch",
    "patches",
    "factor",
    "encoding",
    "spread",
];
const DENOISE_KEYS: &[&str] =
    &["out", "model", "mnist", "threshold", "digit", "images", "n", "noise", "seed", "sample_hidden"];
const CLASSIFY_KEYS: &[&str] = &["out", "model", "mnist", "threshold", "digit", "train_n", "test_n", "raw_baseline"];
const SUPERRES_KEYS: &[&str] = &["out", "model", "reference", "input", "cycles", "stride"];
const FILTERS_KEYS: &[&str] = &["out", "model"];
const EVAL_KEYS: &[&str] = &["out", "reference", "test"];

fn train_config(s: &Settings, f: &TrainFlags, mean_field_default: bool) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: s.or(f.epochs, "epochs", d.epochs)?,
        learning_rate: s.or(f.learning_rate, "learning_rate", d.learning_rate)?,
        weight_decay: s.or(f.weight_decay, "weight_decay", d.weight_decay)?,
        momentum: s.or(f.momentum, "momentum", d.momentum)?,
        batch_size: s.or(f.batch_size, "batch_size", d.batch_size)?,
        cd_steps: s.or(f.cd_steps, "cd_steps", d.cd_steps)?,
        seed: s.required(f.seed, "seed")?,
        mean_field_negative: f.mean_field_negative || s.or(None, "mean_field_negative", mean_field_default)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| CliError { code: DATA, message: format!("{}: {e}", path.display()) })
}

fn save_telemetry(path: &Path, reports: &[EpochReport]) -> CliResult {
    let mut w = BufWriter::new(File::create(path)?);
    write_telemetry(&mut w, reports)?;
    Ok(())
}

/// Writes whatever telemetry exists, then passes the training result on.
fn with_telemetry<T>(path: &Path, result: mvrbm::Result<(T, Vec<EpochReport>)>) -> CliResult<T> {
    match result {
        Ok((model, reports)) => {
            save_telemetry(path, &reports)?;
            Ok(model)
        }
        Err(Error::Diverged { epoch, batch, reports }) => {
            save_telemetry(path, &reports)?;
            Err(Error::Diverged { epoch, batch, reports }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn mnist_dir(s: &Settings, flag: Option<std::path::PathBuf>) -> CliResult<std::path::PathBuf> {
    s.required_path(flag, "mnist")
}

pub fn train(a: TrainArgs) -> CliResult {
    let s = Settings::load(a.common.config.as_deref(), TRAIN_KEYS)?;
    let out = out_dir(&s, a.common.out.clone())?;
    let kind = s.or(a.kind.clone(), "kind", "mvrbm".to_string())?;
    let model_path = out.join("model.bin");
    let telemetry = out.join("telemetry.csv");
    match kind.as_str() {
        "mvrbm" => {
            let baseline = s.opt(a.baseline.clone(), "baseline")?;
            if let Some(b) = &baseline {
                if b != "rbm" {
                    return Err(CliError::usage(format!("unknown baseline {b:?} (expected rbm)")));
                }
            }
            let cfg = train_config(&s, &a.train, false)?;
            let hidden = s.dims(a.hidden.clone(), "hidden", (15, 15))?;
            let threshold = s.threshold(a.mnist.threshold.clone(), Some(0.5))?;
            let n = s.or(a.n, "n", usize::MAX)?;
            let digit = s.opt(a.mnist.digit, "digit")?;
            let all = load_mnist(mnist_dir(&s, a.mnist.mnist.clone())?, MnistSplit::Train)?;
            let subset = select_training_set(&all, n, digit);
            if subset.is_empty() {
                return Err(Error::Empty("training selection").into());
            }
            let inputs = mnist_inputs(&subset, threshold)?;
            let (visible, shape) = (subset.images[0].pixels().dim(), hidden);
            let model = if baseline.is_some() {
                let vecs: Vec<_> = inputs.iter().map(vec_col_major).collect();
                Model::Rbm(with_telemetry(
                    &telemetry,
                    rbm_train(&vecs, shape.0 * shape.1, &cfg, TrainHooks::default()),
                )?)
            } else {
                let shape = LayerShape::new(visible, shape)?;
                Model::Mvrbm(with_telemetry(&telemetry, train_arrays(&inputs, shape, &cfg, TrainHooks::default()))?)
            };
            persistence::save(&model, &model_path)?;
            println!("trained {} on {} images; wrote {}", model.kind().name(), subset.len(), model_path.display());
        }
        "mmvrbm" => {
            let d = SrTrainConfig::default();
            let cfg = SrTrainConfig {
                patch: s.or(a.patch, "patch", d.patch)?,
                patches: s.or(a.patches, "patches", d.patches)?,
                factor: s.or(a.factor, "factor", d.factor)?,
                hidden: s.dims(a.hidden.clone(), "hidden", d.hidden)?,
                encoding: SrEncoding::parse(&s.or(a.encoding.clone(), "encoding", d.encoding.name().to_string())?)?,
                spread: s.or(a.spread, "spread", d.spread)?,
                train: train_config(&s, &a.train, d.train.mean_field_negative)?,
            };
            let manifest = s.required_path(a.manifest.clone(), "manifest")?;
            let corpus = read_manifest(&manifest)?
                .iter()
                .map(|p| Ok(read_pnm_file(p)?.into_gray()))
                .collect::<mvrbm::Result<Vec<_>>>()?;
            let model = with_telemetry(&telemetry, train_superres(&corpus, &cfg, TrainHooks::default()))?;
            model.save(&model_path)?;
            println!("trained mmvrbm on {} patches; wrote {}", cfg.patches, model_path.display());
        }
        other => return Err(CliError::usage(format!("unknown model kind {other:?} (expected mvrbm or mmvrbm)"))),
    }
    Ok(())
}

fn load_mvrbm(path: &Path) -> CliResult<mvrbm::MvrbmParams> {
    match persistence::load(path)? {
        Model::Mvrbm(p) => Ok(p),
        other => Err(CliError {
            code: DATA,
            message: format!("{} holds a {} model; an mvrbm model is required", path.display(), other.kind().name()),
        }),
    }
}

fn read_gray_manifest(path: &Path) -> CliResult<Vec<ImageGray>> {
    Ok(read_manifest(path)?.iter().map(|p| Ok(read_pnm_file(p)?.into_gray())).collect::<mvrbm::Result<Vec<_>>>()?)
}

pub fn denoise(a: DenoiseArgs) -> CliResult {
    let s = Settings::load(a.common.config.as_deref(), DENOISE_KEYS)?;
    let out = out_dir(&s, a.common.out.clone())?;
    let params = load_mvrbm(&s.required_path(a.model.clone(), "model")?)?;
    let seed: u64 = s.required(a.seed, "seed")?;
    let d = DenoiseConfig::default();
    let cfg = DenoiseConfig {
        noise_fraction: s.or(a.noise, "noise", d.noise_fraction)?,
        threshold: s.threshold(a.mnist.threshold.clone(), d.threshold)?,
        sample_hidden: s.switch(a.sample_hidden, "sample_hidden")?,
    };
    let n = s.or(a.n, "n", 50)?;
    let clean: Vec<ImageGray> = match s.path(a.images.clone(), "images")? {
        Some(manifest) => read_gray_manifest(&manifest)?.into_iter().take(n).collect(),
        None => {
            let test = load_mnist(mnist_dir(&s, a.mnist.mnist.clone())?, MnistSplit::Test)?;
            select_training_set(&test, n, s.opt(a.mnist.digit, "digit")?).images
        }
    };
    let outcome = run_denoise(&params, &clean, &cfg, &mut seeded(seed))?;
    let mut rows = Vec::new();
    for (i, (noisy, denoised)) in outcome.noisy.iter().zip(&outcome.denoised).enumerate() {
        write_pgm_file(noisy, out.join(format!("noisy_{i:04}.pgm")))?;
        write_pgm_file(denoised, out.join(format!("denoised_{i:04}.pgm")))?;
        let id = format!("denoise_{i:04}");
        rows.push(MetricRow::measured(&id, "mae_noisy", outcome.mae_noisy[i]));
        rows.push(MetricRow::measured(&id, "mae_denoised", outcome.mae_denoised[i]));
    }
    rows.push(MetricRow::measured("denoise", "mean_mae_noisy", outcome.mean_noisy()));
    rows.push(MetricRow::measured("denoise", "mean_mae_denoised", outcome.mean_denoised()));
    let clean_cfg = DenoiseConfig { noise_fraction: 0.0, ..cfg.clone() };
    let plain = run_denoise(&params, &clean, &clean_cfg, &mut seeded(seed))?;
    let pixels = clean.first().map_or(0, |c| c.rows() * c.cols()) as f64;
    rows.push(MetricRow::measured("denoise", "recon_error_total", plain.mean_denoised() * pixels));
    rows.push(MetricRow::paper("denoise", "recon_error_total", 10.8488));
    write_text(&out.join("metrics.csv"), &render_metrics(&rows))?;
    println!(
        "denoised {} images: mean MAE {:.5} (noisy {:.5})",
        clean.len(),
        outcome.mean_denoised(),
        outcome.mean_noisy()
    );
    Ok(())
}

pub fn classify(a: ClassifyArgs) -> CliResult {
    let s = Settings::load(a.common.config.as_deref(), CLASSIFY_KEYS)?;
    let out = out_dir(&s, a.common.out.clone())?;
    let model = persistence::load(s.required_path(a.model.clone(), "model")?)?;
    let threshold = s.threshold(a.mnist.threshold.clone(), Some(0.5))?;
    let dir = mnist_dir(&s, a.mnist.mnist.clone())?;
    let digit = s.opt(a.mnist.digit, "digit")?;
    let pick = |d: LabeledDataset, n: usize| select_training_set(&d, n, digit);
    let train_set = pick(load_mnist(&dir, MnistSplit::Train)?, s.or(a.train_n, "train_n", usize::MAX)?);
    let test_set = pick(load_mnist(&dir, MnistSplit::Test)?, s.or(a.test_n, "test_n", usize::MAX)?);
    let (xtr, xte) = (mnist_inputs(&train_set, threshold)?, mnist_inputs(&test_set, threshold)?);
    let result = match &model {
        Model::Mvrbm(p) => classify_mvrbm(p, &xtr, &train_set, &xte, &test_set)?,
        Model::Rbm(p) => classify_rbm(p, &xtr, &train_set, &xte, &test_set)?,
        Model::Multimodal(_) => {
            return Err(CliError { code: DATA, message: "classification needs an mvrbm or rbm model".into() })
        }
    };
    let id = format!("classify_{}", model.kind().name());
    let mut rows = vec![
        MetricRow::measured(&id, "error_rate", result.error_rate),
        MetricRow::measured(&id, "train_count", train_set.len() as f64),
        MetricRow::measured(&id, "test_count", test_set.len() as f64),
    ];
    for (t, row) in result.confusion.iter().enumerate() {
        for (p, &c) in row.iter().enumerate() {
            if c > 0 {
                rows.push(MetricRow::measured(&id, &format!("confusion_{t}_{p}"), c as f64));
            }
        }
    }
    if s.switch(a.raw_baseline, "raw_baseline")? {
        rows.push(MetricRow::measured(
            "classify_raw_pixels",
            "error_rate",
            classify_raw(&train_set, &test_set)?.error_rate,
        ));
    }
    rows.extend(paper_classification_rows());
    write_text(&out.join("metrics.csv"), &render_metrics(&rows))?;
    println!("1-NN error rate {:.4} on {} test images", result.error_rate, test_set.len());
    Ok(())
}

fn upscale_plane(plane: &ImageGray, rows: usize, cols: usize, factor: usize) -> mvrbm::Result<ImageGray> {
    let cropped = plane.crop(rows, cols)?;
    bicubic_resize_to(&bicubic_resize(&cropped, 1.0 / factor as f64)?, rows, cols)
}

pub fn superres(a: SuperresArgs) -> CliResult {
    let s = Settings::load(a.common.config.as_deref(), SUPERRES_KEYS)?;
    let out = out_dir(&s, a.common.out.clone())?;
    let model = SrModel::load(s.required_path(a.model.clone(), "model")?)?;
    let cycles = s.or(a.cycles, "cycles", DEFAULT_CYCLES)?;
    let stride = s.or(a.stride, "stride", (model.patch / 2).max(1))?;
    let (reference, input) = (s.path(a.reference.clone(), "reference")?, s.path(a.input.clone(), "input")?);
    let mut rows = Vec::new();
    let (image, is_reference) = match (reference, input) {
        (Some(r), None) => (read_pnm_file(r)?, true),
        (None, Some(i)) => (read_pnm_file(i)?, false),
        _ => return Err(CliError::usage("exactly one of --reference or --input is required")),
    };
    let luma = match &image {
        Pnm::Gray(g) => g.clone(),
        Pnm::Rgb(rgb) => ycbcr_split(rgb).0,
    };
    let f = model.factor;
    let (y_out, y_bicubic, dims) = if is_reference {
        let report = SrReport::evaluate(&model, &luma, cycles, stride)?;
        let gain = report.gain_db();
        rows.push(MetricRow::measured("superres", "rmse", report.model_metrics.rmse));
        rows.push(MetricRow::measured("superres", "psnr", report.model_metrics.psnr));
        rows.push(MetricRow::measured("superres_bicubic", "rmse", report.bicubic_metrics.rmse));
        rows.push(MetricRow::measured("superres_bicubic", "psnr", report.bicubic_metrics.psnr));
        rows.push(MetricRow::measured("superres", "gain_db", gain));
        rows.push(MetricRow::measured("superres", "under_trained", f64::from(u8::from(gain < MIN_GAIN_DB))));
        let dims = (report.reference.rows(), report.reference.cols());
        (report.output, report.bicubic, dims)
    } else {
        let up = bicubic_resize(&luma, f as f64)?;
        let dims = (up.rows(), up.cols());
        (super_resolve(&model, &up, cycles, stride)?, up, dims)
    };
    rows.extend(paper_superres_rows());
    match &image {
        Pnm::Gray(_) => {
            write_pgm_file(&y_out, out.join("output.pgm"))?;
            write_pgm_file(&y_bicubic, out.join("bicubic.pgm"))?;
        }
        Pnm::Rgb(rgb) => {
            let (_, cb, cr) = ycbcr_split(rgb);
            let (cb, cr) = if is_reference {
                (upscale_plane(&cb, dims.0, dims.1, f)?, upscale_plane(&cr, dims.0, dims.1, f)?)
            } else {
                (bicubic_resize_to(&cb, dims.0, dims.1)?, bicubic_resize_to(&cr, dims.0, dims.1)?)
            };
            write_text_bytes(&out.join("output.ppm"), &write_ppm(&ycbcr_merge(&y_out, &cb, &cr)?))?;
            write_text_bytes(&out.join("bicubic.ppm"), &write_ppm(&ycbcr_merge(&y_bicubic, &cb, &cr)?))?;
        }
    }
    write_text(&out.join("metrics.csv"), &render_metrics(&rows))?;
    if is_reference {
        println!("super-resolved {}x{} image; metrics in {}", dims.0, dims.1, out.join("metrics.csv").display());
    } else {
        println!("super-resolved to {}x{}", dims.0, dims.1);
    }
    Ok(())
}

fn write_text_bytes(path: &Path, bytes: &[u8]) -> CliResult {
    std::fs::write(path, bytes).map_err(|e| CliError { code: DATA, message: format!("{}: {e}", path.display()) })
}

pub fn filters(a: FiltersArgs) -> CliResult {
    let s = Settings::load(a.common.config.as_deref(), FILTERS_KEYS)?;
    let out = out_dir(&s, a.common.out.clone())?;
    let params = match persistence::load(s.required_path(a.model.clone(), "model")?)? {
        Model::Mvrbm(p) => p,
        Model::Multimodal(p) => p.primary_mvrbm(),
        Model::Rbm(_) => {
            return Err(CliError { code: DATA, message: "a classic RBM has no factored dictionary to render".into() });
        }
    };
    let grid = filter_grid(&params);
    let path = out.join("filters.pgm");
    write_pgm_file(&grid, &path)?;
    println!("wrote {}x{} filter grid to {}", grid.rows(), grid.cols(), path.display());
    Ok(())
}

pub fn eval(a: EvalArgs) -> CliResult {
    let s = Settings::load(a.common.config.as_deref(), EVAL_KEYS)?;
    let reference = read_pnm_file(s.required_path(a.reference.clone(), "reference")?)?.into_gray();
    let test = read_pnm_file(s.required_path(a.test.clone(), "test")?)?.into_gray();
    let m = psnr(reference.pixels(), test.pixels())?;
    let rows = [
        MetricRow::measured("eval", "rmse", m.rmse),
        MetricRow::measured("eval", "psnr", m.psnr),
        MetricRow::measured("eval", "per_pixel_mae", m.per_pixel_mae),
    ];
    let csv = render_metrics(&rows);
    match s.path(a.common.out.clone(), "out")? {
        Some(_) => write_text(&out_dir(&s, a.common.out)?.join("metrics.csv"), &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
