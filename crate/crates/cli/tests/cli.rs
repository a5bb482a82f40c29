use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use mvrbm::data::{write_idx_images, write_idx_labels, write_ppm, ImageGray, RgbImage};
use ndarray::Array2;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvrbm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn mvrbm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Class `c` lights row `c` and column `c`, plus a label-independent speckle.
fn digit_image(class: usize, index: usize) -> ImageGray {
    let mut px = Array2::zeros((10, 10));
    for k in 0..10 {
        px[(class, k)] = 1.0;
        px[(k, class)] = 0.8;
    }
    px[((index * 7) % 10, (index * 3) % 10)] = 1.0;
    ImageGray::new(px).unwrap()
}

fn write_split(dir: &Path, prefix: &str, n: usize) {
    let images: Vec<_> = (0..n).map(|i| digit_image(i % 10, i)).collect();
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), write_idx_images(&images).unwrap()).unwrap();
    fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), write_idx_labels(&labels)).unwrap();
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let mnist = dir.path().join("mnist");
        fs::create_dir(&mnist).unwrap();
        write_split(&mnist, "train", 100);
        write_split(&mnist, "t10k", 30);
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn s(&self, rel: &str) -> String {
        self.path(rel).to_string_lossy().into_owned()
    }

    fn train(&self, out: &str, extra: &[&str]) -> Output {
        let (mnist, out) = (self.s("mnist"), self.s(out));
        let mut args = vec!["train", "--mnist", &mnist, "--out", &out];
        for (flag, value) in
            [("--hidden", "4x4"), ("--epochs", "5"), ("--batch-size", "10"), ("--learning-rate", "0.05")]
        {
            if !extra.contains(&flag) {
                args.extend_from_slice(&[flag, value]);
            }
        }
        args.extend_from_slice(extra);
        run(&args)
    }

    /// A smooth color image, large enough for a few 8×8 patches at ×2.
    fn write_color(&self, rel: &str, phase: f64) -> PathBuf {
        let f = |k: f64| {
            Array2::from_shape_fn((24, 24), |(r, c)| {
                0.5 + 0.4 * ((r as f64 * 0.3 + phase * k).sin() * (c as f64 * 0.25 + k).cos())
            })
        };
        let img = RgbImage::new(f(0.0), f(1.0), f(2.0)).unwrap();
        let path = self.path(rel);
        fs::write(&path, write_ppm(&img)).unwrap();
        path
    }
}

#[test]
fn help_and_bad_usage_exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["train", "--epochs", "abc"])), 1);
}

#[test]
fn training_requires_a_seed() {
    let fx = Fixture::new();
    let o = fx.train("out", &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
    assert!(!fx.path("out/model.bin").exists());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let fx = Fixture::new();
    fs::write(fx.path("bad.cfg"), "seed = 1\nlearning_rat = 0.1\n").unwrap();
    let o = fx.train("out", &["--config", &fx.s("bad.cfg")]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("learning_rat"));
    assert_eq!(stderr(&o).trim().lines().count(), 1);
}

#[test]
fn invalid_hyperparameters_are_rejected_before_work() {
    let fx = Fixture::new();
    let o = fx.train("out", &["--seed", "1", "--momentum", "1.5"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let o = fx.train("out", &["--seed", "1", "--kind", "dbn"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_dataset_is_a_data_error() {
    let fx = Fixture::new();
    let out = fx.s("out");
    let o = run(&["train", "--seed", "1", "--mnist", "/nonexistent/mnist", "--out", &out]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn smoke_training_is_fast_and_writes_artifacts() {
    let fx = Fixture::new();
    let t = Instant::now();
    let o = fx.train("out", &["--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let tele = fs::read_to_string(fx.path("out/telemetry.csv")).unwrap();
    let lines: Vec<_> = tele.lines().collect();
    assert_eq!(lines[0], mvrbm::trainer::TELEMETRY_HEADER);
    assert_eq!(lines.len(), 6);
    match mvrbm::persistence::load(fx.path("out/model.bin")).unwrap() {
        mvrbm::persistence::Model::Mvrbm(p) => {
            assert_eq!(p.visible_dims(), (10, 10));
            assert_eq!(p.hidden_dims(), (4, 4));
        }
        _ => panic!("expected an mvrbm artifact"),
    }
}

#[test]
fn same_seed_gives_identical_artifact_bytes() {
    let fx = Fixture::new();
    assert_eq!(code(&fx.train("a", &["--seed", "3"])), 0);
    assert_eq!(code(&fx.train("b", &["--seed", "3"])), 0);
    assert_eq!(code(&fx.train("c", &["--seed", "4"])), 0);
    let read = |d: &str| fs::read(fx.path(&format!("{d}/model.bin"))).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn flags_override_config_entries() {
    let fx = Fixture::new();
    fs::write(fx.path("run.cfg"), "# smoke\nseed = 5\nepochs = 3\nhidden = 3x3\n").unwrap();
    let (mnist, out, cfg) = (fx.s("mnist"), fx.s("out"), fx.s("run.cfg"));
    let o = run(&["train", "--config", &cfg, "--mnist", &mnist, "--out", &out, "--epochs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(fx.path("out/telemetry.csv")).unwrap().lines().count(), 3);
    let mvrbm::persistence::Model::Mvrbm(p) = mvrbm::persistence::load(fx.path("out/model.bin")).unwrap() else {
        panic!("expected an mvrbm artifact");
    };
    assert_eq!(p.hidden_dims(), (3, 3));
}

#[test]
fn divergence_exits_three_and_keeps_telemetry() {
    let fx = Fixture::new();
    let o = fx.train("out", &["--seed", "1", "--learning-rate", "1e12", "--threshold", "none"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let tele = fs::read_to_string(fx.path("out/telemetry.csv")).unwrap();
    assert!(tele.starts_with(mvrbm::trainer::TELEMETRY_HEADER));
    assert!(!fx.path("out/model.bin").exists());
}

#[test]
fn rbm_baseline_trains_and_has_no_filter_grid() {
    let fx = Fixture::new();
    let o = fx.train("out", &["--seed", "2", "--baseline", "rbm"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let model = mvrbm::persistence::load(fx.path("out/model.bin")).unwrap();
    assert_eq!(model.kind().name(), "rbm");
    let (m, f) = (fx.s("out/model.bin"), fx.s("filters"));
    assert_eq!(code(&run(&["filters", "--model", &m, "--out", &f])), 2);
}

#[test]
fn denoise_writes_pairs_metrics_and_is_deterministic() {
    let fx = Fixture::new();
    assert_eq!(code(&fx.train("model", &["--seed", "1"])), 0);
    let (m, mnist) = (fx.s("model/model.bin"), fx.s("mnist"));
    let go = |out: &str, seed: &str| {
        let out = fx.s(out);
        run(&["denoise", "--model", &m, "--mnist", &mnist, "--out", &out, "--n", "5", "--seed", seed])
    };
    assert_eq!(code(&go("d1", "9")), 0);
    assert_eq!(code(&go("d2", "9")), 0);
    for name in ["noisy_0004.pgm", "denoised_0004.pgm", "metrics.csv"] {
        assert_eq!(
            fs::read(fx.path(&format!("d1/{name}"))).unwrap(),
            fs::read(fx.path(&format!("d2/{name}"))).unwrap()
        );
    }
    let csv = fs::read_to_string(fx.path("d1/metrics.csv")).unwrap();
    assert!(csv.starts_with(mvrbm::eval::METRICS_HEADER));
    assert!(csv.contains("denoise,mean_mae_denoised,"));
    assert!(csv.contains("denoise,recon_error_total,10.8488,paper"));
    let out = fx.s("d3");
    assert_eq!(code(&run(&["denoise", "--model", &m, "--mnist", &mnist, "--out", &out])), 1);
}

#[test]
fn denoise_rejects_mismatched_images() {
    let fx = Fixture::new();
    assert_eq!(code(&fx.train("model", &["--seed", "1"])), 0);
    let img = ImageGray::filled(12, 12, 0.0).unwrap();
    mvrbm::data::write_pgm_file(&img, fx.path("big.pgm")).unwrap();
    fs::write(fx.path("list.txt"), "big.pgm\n").unwrap();
    let (m, l, out) = (fx.s("model/model.bin"), fx.s("list.txt"), fx.s("d"));
    let o = run(&["denoise", "--model", &m, "--images", &l, "--out", &out, "--seed", "1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn classify_reports_error_confusion_and_reference_rows() {
    let fx = Fixture::new();
    assert_eq!(code(&fx.train("model", &["--seed", "1", "--epochs", "20"])), 0);
    let (m, mnist, out) = (fx.s("model/model.bin"), fx.s("mnist"), fx.s("cls"));
    let o = run(&["classify", "--model", &m, "--mnist", &mnist, "--out", &out, "--raw-baseline"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(fx.path("cls/metrics.csv")).unwrap();
    let value = |prefix: &str| -> f64 {
        let line = csv.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("{prefix} missing"));
        line.split(',').nth(2).unwrap().parse().unwrap()
    };
    assert_eq!(value("classify_mvrbm,test_count"), 30.0);
    assert_eq!(value("classify_raw_pixels,error_rate"), 0.0);
    assert!(value("classify_mvrbm,error_rate") <= 0.5);
    let confusion: f64 = csv
        .lines()
        .filter(|l| l.contains(",confusion_"))
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert_eq!(confusion, 30.0);
    assert!(csv.contains("classify_n50000,error_rate,0.0359,paper"));
}

#[test]
fn filters_grid_has_documented_layout() {
    let fx = Fixture::new();
    assert_eq!(code(&fx.train("model", &["--seed", "1"])), 0);
    let (m, out) = (fx.s("model/model.bin"), fx.s("f"));
    assert_eq!(code(&run(&["filters", "--model", &m, "--out", &out])), 0);
    let grid = mvrbm::data::read_pnm_file(fx.path("f/filters.pgm")).unwrap().into_gray();
    assert_eq!((grid.rows(), grid.cols()), (4 * 11 - 1, 4 * 11 - 1));
}

#[test]
fn eval_prints_psnr_csv() {
    let fx = Fixture::new();
    let a = ImageGray::filled(8, 8, 100.0 / 255.0).unwrap();
    let b = ImageGray::filled(8, 8, 105.0 / 255.0).unwrap();
    mvrbm::data::write_pgm_file(&a, fx.path("a.pgm")).unwrap();
    mvrbm::data::write_pgm_file(&b, fx.path("b.pgm")).unwrap();
    let (pa, pb) = (fx.s("a.pgm"), fx.s("b.pgm"));
    let o = run(&["eval", "--reference", &pa, "--test", &pb]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let psnr: f64 =
        csv.lines().find(|l| l.starts_with("eval,psnr")).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((psnr - 20.0 * (255.0f64 / 5.0).log10()).abs() < 1e-9);
    let o = run(&["eval", "--reference", &pa, "--test", &pa]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("eval,psnr,inf,measured"));
    assert_eq!(code(&run(&["eval", "--reference", &pa, "--test", "/nonexistent.pgm"])), 2);
}

#[test]
fn superres_pipeline_round_trip_is_deterministic() {
    let fx = Fixture::new();
    let train_img = fx.write_color("train.ppm", 0.0);
    fs::write(fx.path("corpus.txt"), format!("{}\n", train_img.file_name().unwrap().to_string_lossy())).unwrap();
    let held = fx.write_color("held.ppm", 0.7);
    let corpus = fx.s("corpus.txt");
    let train = |out: &str| {
        let out = fx.s(out);
        run(&[
            "train",
            "--kind",
            "mmvrbm",
            "--manifest",
            &corpus,
            "--out",
            &out,
            "--seed",
            "11",
            "--patch",
            "8",
            "--patches",
            "60",
            "--hidden",
            "5x5",
            "--epochs",
            "3",
            "--batch-size",
            "10",
        ])
    };
    let o = train("m1");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&train("m2")), 0);
    assert_eq!(fs::read(fx.path("m1/model.bin")).unwrap(), fs::read(fx.path("m2/model.bin")).unwrap());
    assert!(fx.path("m1/model.bin.sr").exists());

    let (m, h) = (fx.s("m1/model.bin"), held.to_string_lossy().into_owned());
    let sr = |out: &str| {
        let out = fx.s(out);
        run(&["superres", "--model", &m, "--reference", &h, "--out", &out, "--cycles", "2"])
    };
    let o = sr("s1");
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&sr("s2")), 0);
    assert_eq!(fs::read(fx.path("s1/output.ppm")).unwrap(), fs::read(fx.path("s2/output.ppm")).unwrap());
    let csv = fs::read_to_string(fx.path("s1/metrics.csv")).unwrap();
    assert!(csv.contains("superres,gain_db,"));
    assert!(csv.contains("superres,under_trained,"));
    assert!(csv.contains(",paper"));
    match mvrbm::data::read_pnm_file(fx.path("s1/output.ppm")).unwrap() {
        mvrbm::data::Pnm::Rgb(rgb) => assert_eq!(rgb.dims(), (24, 24)),
        _ => panic!("expected color output"),
    }

    let out = fx.s("s3");
    assert_eq!(code(&run(&["superres", "--model", &m, "--out", &out])), 1);
    let fm = fx.s("fm");
    assert_eq!(code(&run(&["filters", "--model", &m, "--out", &fm])), 0);
}

fn shipped_configs() -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out = Vec::new();
    for dir in ["smoke", "desk", "paper"] {
        let mut files: Vec<_> = fs::read_dir(root.join(dir)).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        out.extend(files);
    }
    out
}

#[test]
fn every_shipped_config_runs_against_fixtures() {
    let fx = Fixture::new();
    let big = {
        let f = |k: f64| {
            Array2::from_shape_fn((80, 80), |(r, c)| 0.5 + 0.4 * ((r as f64 * 0.2 + k).sin() * (c as f64 * 0.15).cos()))
        };
        let path = fx.path("big.ppm");
        fs::write(&path, write_ppm(&RgbImage::new(f(0.0), f(1.0), f(2.0)).unwrap())).unwrap();
        path.to_string_lossy().into_owned()
    };
    fs::write(fx.path("corpus.txt"), "big.ppm\n").unwrap();
    let (mnist, corpus) = (fx.s("mnist"), fx.s("corpus.txt"));
    let configs = shipped_configs();
    assert!(configs.len() > 10);
    for (n, cfg) in configs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.to_string_lossy().ends_with("-train.cfg") || c.ends_with("smoke/train.cfg"))
    {
        let cfg_s = cfg.to_string_lossy().into_owned();
        let out = fx.s(&format!("run{n}"));
        let o = run(&[
            "train",
            "--config",
            &cfg_s,
            "--out",
            &out,
            "--mnist",
            &mnist,
            "--manifest",
            &corpus,
            "--epochs",
            "1",
            "--patches",
            "20",
        ]);
        assert_eq!(code(&o), 0, "{cfg_s}: {}", stderr(&o));
        let apply = PathBuf::from(cfg_s.replace("-train.cfg", ".cfg"));
        if !apply.exists() || apply == *cfg {
            continue;
        }
        let apply_s = apply.to_string_lossy().into_owned();
        let model = format!("{out}/model.bin");
        let eval_out = fx.s(&format!("apply{n}"));
        let command = apply.file_name().unwrap().to_string_lossy().split(['-', '.']).next().unwrap().to_string();
        let mut args = vec![command.as_str(), "--config", &apply_s, "--model", &model, "--out", &eval_out];
        if command == "superres" {
            args.extend_from_slice(&["--reference", &big]);
        } else {
            args.extend_from_slice(&["--mnist", &mnist]);
        }
        let o = run(&args);
        assert_eq!(code(&o), 0, "{apply_s}: {}", stderr(&o));
        assert!(fx.path(&format!("apply{n}/metrics.csv")).exists());
    }
}
