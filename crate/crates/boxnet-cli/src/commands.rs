//! Argument definitions and handlers, one pair per subcommand.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, ValueEnum};

use boxnet::util::atomic_write;
use boxnet::{
    ablate, evaluate, generate_synthetic, histogram, ingest_kitti, load_checkpoint, read_pbev,
    resample, resample_all, save_checkpoint, split_samples, time_inference, train, write_pbev,
    AblationGrid, AngleMode, BoxEstimator, BoxNetEstimator, CenterMode, ClassChoice, ClassLabel,
    EvalReport, HistogramMetric, LossKind, NetworkConfig, SlfConfig, SlfCriterion, SlfEstimator,
    SynthConfig, TrainConfig, VisibilityMode, RESAMPLE_N,
};

use crate::manifest::Manifest;

/// An argument-level mistake found after clap parsing; reported like clap's
/// own usage errors, with exit code 2.
#[derive(Debug)]
pub(crate) struct Usage(pub(crate) String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(anyhow!(Usage(format!("missing file {}", p.display()))))
    }
}

fn require_dir(p: &Path) -> Result<()> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(anyhow!(Usage(format!("missing directory {}", p.display()))))
    }
}

/// Parses a width multiplier given as a decimal or a fraction like `1/16`.
fn parse_scale(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let n: f64 = num.trim().parse().map_err(|_| format!("bad scale {s:?}"))?;
            let d: f64 = den.trim().parse().map_err(|_| format!("bad scale {s:?}"))?;
            n / d
        }
        None => s.trim().parse().map_err(|_| format!("bad scale {s:?}"))?,
    };
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("scale must be in (0, 1], got {s}"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum ModeArg {
    Full,
    Lshape,
    SingleEdge,
    Mixed,
}

impl ModeArg {
    fn to_lib(self) -> VisibilityMode {
        match self {
            ModeArg::Full => VisibilityMode::Full,
            ModeArg::Lshape => VisibilityMode::LShape,
            ModeArg::SingleEdge => VisibilityMode::SingleEdge,
            ModeArg::Mixed => VisibilityMode::Mixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum ClassArg {
    Car,
    Pedestrian,
    Cyclist,
    Mixed,
}

impl ClassArg {
    fn to_lib(self) -> ClassChoice {
        match self {
            ClassArg::Car => ClassChoice::Fixed(ClassLabel::Car),
            ClassArg::Pedestrian => ClassChoice::Fixed(ClassLabel::Pedestrian),
            ClassArg::Cyclist => ClassChoice::Fixed(ClassLabel::Cyclist),
            ClassArg::Mixed => ClassChoice::Mixed,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ClassArg::Car => "car",
            ClassArg::Pedestrian => "pedestrian",
            ClassArg::Cyclist => "cyclist",
            ClassArg::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum AngleArg {
    Direct,
    Sincos,
    #[value(name = "sincos2")]
    Sincos2,
}

impl AngleArg {
    fn to_lib(self) -> AngleMode {
        match self {
            AngleArg::Direct => AngleMode::Direct,
            AngleArg::Sincos => AngleMode::SinCos,
            AngleArg::Sincos2 => AngleMode::SinCos2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum CenterArg {
    None,
    Mean,
    Median,
}

impl CenterArg {
    fn to_lib(self) -> CenterMode {
        match self {
            CenterArg::None => CenterMode::None,
            CenterArg::Mean => CenterMode::Mean,
            CenterArg::Median => CenterMode::Median,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum SwitchArg {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum LossArg {
    Mse,
    Huber,
}

impl LossArg {
    fn to_lib(self) -> LossKind {
        match self {
            LossArg::Mse => LossKind::Mse,
            LossArg::Huber => LossKind::Huber,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum SlfArg {
    Area,
    Closeness,
    Variance,
}

impl SlfArg {
    fn to_lib(self) -> SlfCriterion {
        match self {
            SlfArg::Area => SlfCriterion::Area,
            SlfArg::Closeness => SlfCriterion::Closeness,
            SlfArg::Variance => SlfCriterion::Variance,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub(crate) enum MetricArg {
    ErrC,
    ErrTheta,
    Iou,
}

impl MetricArg {
    fn to_lib(self) -> HistogramMetric {
        match self {
            MetricArg::ErrC => HistogramMetric::ErrC,
            MetricArg::ErrTheta => HistogramMetric::ErrThetaDeg,
            MetricArg::Iou => HistogramMetric::Iou,
        }
    }
}

#[derive(Args)]
pub(crate) struct GenSynthArgs {
    /// Output cloud file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Number of samples to generate.
    #[arg(long, value_name = "K")]
    count: usize,
    /// Generator seed.
    #[arg(long, value_name = "S")]
    seed: u64,
    /// Point noise standard deviation, meters.
    #[arg(long, value_name = "M", default_value_t = 0.02)]
    noise: f64,
    /// Which edges of each box produce points.
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    /// Object class to draw boxes from.
    #[arg(long, value_enum, default_value = "car")]
    class: ClassArg,
}

pub(crate) fn gen_synth(a: GenSynthArgs, argv: &[String]) -> Result<()> {
    let cfg = SynthConfig {
        class: a.class.to_lib(),
        mode: a.mode.to_lib(),
        noise_m: a.noise,
        ..SynthConfig::default()
    };
    let samples = generate_synthetic(&cfg, a.count, a.seed)?;
    write_pbev(&a.out, &samples)?;

    let mut m = Manifest::begin(argv);
    m.push("seed", a.seed);
    m.push("config.count", a.count);
    m.push("config.noise_m", a.noise);
    m.push("config.mode", format!("{:?}", a.mode.to_lib()).to_lowercase());
    m.push("config.class", a.class.name());
    m.hash_file("dataset.out", &a.out)?;
    m.write_next_to(&[&a.out])?;
    println!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(())
}

#[derive(Args)]
pub(crate) struct IngestKittiArgs {
    /// Directory of KITTI label_2 text files.
    #[arg(long, value_name = "DIR")]
    labels: PathBuf,
    /// Directory of KITTI velodyne .bin files.
    #[arg(long, value_name = "DIR")]
    velodyne: PathBuf,
    /// Directory of KITTI calib text files.
    #[arg(long, value_name = "DIR")]
    calib: PathBuf,
    /// Output cloud file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Drop objects with fewer points inside their box.
    #[arg(long, value_name = "N", default_value_t = 30)]
    min_points: usize,
}

pub(crate) fn ingest_kitti_cmd(a: IngestKittiArgs, argv: &[String]) -> Result<()> {
    require_dir(&a.labels)?;
    require_dir(&a.velodyne)?;
    require_dir(&a.calib)?;
    let samples = ingest_kitti(&a.labels, &a.velodyne, &a.calib, a.min_points)?;
    write_pbev(&a.out, &samples)?;

    let mut m = Manifest::begin(argv);
    m.push("config.min_points", a.min_points);
    m.hash_file("dataset.out", &a.out)?;
    m.write_next_to(&[&a.out])?;
    println!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(())
}

#[derive(Args)]
pub(crate) struct SplitArgs {
    /// Input cloud file.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output file for the training part.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    /// Output file for the test part.
    #[arg(long, value_name = "FILE")]
    test: PathBuf,
    /// Fraction of samples that go to the training part, in (0, 1).
    #[arg(long, value_name = "R")]
    ratio: f64,
    /// Shuffle seed.
    #[arg(long, value_name = "S")]
    seed: u64,
}

pub(crate) fn split(a: SplitArgs, argv: &[String]) -> Result<()> {
    require_file(&a.input)?;
    let samples = read_pbev(&a.input)?;
    let n = samples.len();
    let parts = split_samples(samples, a.ratio, a.seed)?;
    write_pbev(&a.train, &parts.train)?;
    write_pbev(&a.test, &parts.test)?;

    let mut m = Manifest::begin(argv);
    m.push("seed", a.seed);
    m.push("config.ratio", a.ratio);
    m.hash_file("dataset.in", &a.input)?;
    m.hash_file("dataset.train", &a.train)?;
    m.hash_file("dataset.test", &a.test)?;
    m.write_next_to(&[&a.train, &a.test])?;
    println!(
        "split {} samples into {} train / {} test",
        n,
        parts.train.len(),
        parts.test.len()
    );
    Ok(())
}

#[derive(Args)]
pub(crate) struct TrainArgs {
    /// Training cloud file.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    /// Validation cloud file; the saved checkpoint is the best epoch by
    /// validation IoU.
    #[arg(long, value_name = "FILE")]
    val: PathBuf,
    /// Output checkpoint file.
    #[arg(long, value_name = "CKPT")]
    out: PathBuf,
    /// Orientation encoding the network regresses.
    #[arg(long, value_enum, default_value = "sincos2")]
    angle_mode: AngleArg,
    /// Per-cloud anchor subtracted before the network and added back after.
    #[arg(long, value_enum, default_value = "mean")]
    center_mode: CenterArg,
    /// Feed angle and size outputs into the center head.
    #[arg(long, value_enum, default_value = "on")]
    concat: SwitchArg,
    /// Layer-width multiplier, a decimal or a fraction like 1/16.
    #[arg(long, value_name = "S", value_parser = parse_scale, default_value = "1")]
    scale: f64,
    /// Training loss.
    #[arg(long, value_enum, default_value = "mse")]
    loss: LossArg,
    /// Quadratic-to-linear knee for --loss huber.
    #[arg(long, value_name = "D", default_value_t = 1.0)]
    huber_delta: f64,
    #[arg(long, value_name = "N", default_value_t = 400)]
    epochs: usize,
    #[arg(long, value_name = "B", default_value_t = 32)]
    batch: usize,
    /// Master seed for initialization, shuffling, and cloud resampling.
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
    /// Optional per-epoch training log CSV.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
}

pub(crate) fn train_cmd(a: TrainArgs, argv: &[String]) -> Result<()> {
    require_file(&a.train)?;
    require_file(&a.val)?;
    let train_raw = read_pbev(&a.train)?;
    let val_raw = read_pbev(&a.val)?;
    let train_rs = resample_all(&train_raw, RESAMPLE_N, a.seed)?;
    let val_rs = resample_all(&val_raw, RESAMPLE_N, a.seed.wrapping_add(1))?;

    let net_cfg = NetworkConfig {
        angle_mode: a.angle_mode.to_lib(),
        center_mode: a.center_mode.to_lib(),
        concat_enabled: matches!(a.concat, SwitchArg::On),
        scale: a.scale,
        loss_kind: a.loss.to_lib(),
        huber_delta: a.huber_delta,
        ..NetworkConfig::default()
    };
    let train_cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
        ..TrainConfig::default()
    };

    let mut m = Manifest::begin(argv);
    m.push("seed", a.seed);
    m.hash_file("dataset.train", &a.train)?;
    m.hash_file("dataset.val", &a.val)?;
    push_net_config(&mut m, &net_cfg);
    m.push("config.epochs", a.epochs);
    m.push("config.batch", a.batch);

    let outcome = train(&train_rs, &val_rs, &net_cfg, &train_cfg)?;
    for l in &outcome.log {
        println!(
            "epoch {}: train_loss {:.6} val_err_c {:.4} val_err_theta {:.3} val_iou {:.4}",
            l.epoch, l.train_loss, l.val_err_c, l.val_err_theta_deg, l.val_iou
        );
    }
    save_checkpoint(&outcome.params, &net_cfg, &a.out)?;
    let mut artifacts: Vec<&Path> = vec![&a.out];
    if let Some(log_path) = &a.log {
        let mut csv = String::from("epoch,train_loss,val_err_c,val_err_theta_deg,val_iou\n");
        for l in &outcome.log {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                l.epoch, l.train_loss, l.val_err_c, l.val_err_theta_deg, l.val_iou
            ));
        }
        atomic_write(log_path, csv.as_bytes())
            .with_context(|| format!("writing training log {}", log_path.display()))?;
        artifacts.push(log_path);
    }
    m.push("result.best_epoch", outcome.best_epoch);
    m.write_next_to(&artifacts)?;
    println!(
        "saved epoch {} of {} to {}",
        outcome.best_epoch,
        a.epochs,
        a.out.display()
    );
    Ok(())
}

fn push_net_config(m: &mut Manifest, cfg: &NetworkConfig) {
    m.push("config.angle_mode", cfg.angle_mode);
    m.push("config.center_mode", cfg.center_mode);
    m.push("config.concat", if cfg.concat_enabled { "on" } else { "off" });
    m.push("config.scale", cfg.scale);
    m.push("config.loss", cfg.loss_kind);
    m.push("config.huber_delta", cfg.huber_delta);
}

#[derive(Args)]
#[command(group(ArgGroup::new("estimator").required(true).args(["ckpt", "slf"])))]
pub(crate) struct EvalArgs {
    /// Labeled cloud file to evaluate on.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Checkpoint to evaluate.
    #[arg(long, value_name = "CKPT")]
    ckpt: Option<PathBuf>,
    /// Evaluate the search-based L-shape fit with this criterion instead.
    #[arg(long, value_enum, value_name = "CRITERION")]
    slf: Option<SlfArg>,
    /// Orientation search resolution for --slf, degrees.
    #[arg(long, value_name = "DEG", default_value_t = 0.5)]
    step_deg: f64,
    /// Output per-sample metrics CSV.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,
    /// Optional histogram CSV of one metric.
    #[arg(long, value_name = "FILE")]
    hist: Option<PathBuf>,
    /// Metric to histogram.
    #[arg(long, value_enum, default_value = "err-theta")]
    hist_metric: MetricArg,
    /// Histogram bin width.
    #[arg(long, value_name = "W", default_value_t = 1.0)]
    hist_bin: f64,
    /// Cloud resampling seed for network estimators.
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
}

pub(crate) fn eval(a: EvalArgs, argv: &[String]) -> Result<()> {
    require_file(&a.data)?;
    let samples = read_pbev(&a.data)?;
    let estimator: Box<dyn BoxEstimator> = match (&a.ckpt, a.slf) {
        (Some(ckpt), None) => {
            require_file(ckpt)?;
            let (params, cfg) = load_checkpoint(ckpt)?;
            Box::new(BoxNetEstimator::new(params, cfg)?)
        }
        (None, Some(slf)) => {
            let mut cfg = SlfConfig::with_criterion(slf.to_lib());
            cfg.step = a.step_deg.to_radians();
            Box::new(SlfEstimator::new(cfg))
        }
        // The clap group admits exactly one of the two.
        _ => unreachable!(),
    };

    let report = evaluate(estimator.as_ref(), &samples, a.seed)?;
    atomic_write(&a.report, report.to_csv().as_bytes())
        .with_context(|| format!("writing report {}", a.report.display()))?;
    let mut artifacts: Vec<&Path> = vec![&a.report];
    if let Some(hist_path) = &a.hist {
        let h = histogram(&report, a.hist_metric.to_lib(), a.hist_bin)?;
        atomic_write(hist_path, h.to_csv().as_bytes())
            .with_context(|| format!("writing histogram {}", hist_path.display()))?;
        artifacts.push(hist_path);
    }

    let mut m = Manifest::begin(argv);
    m.push("seed", a.seed);
    m.push("config.method", &report.method);
    m.push("config.hash", &report.config_hash);
    m.hash_file("dataset.data", &a.data)?;
    m.push("dataset.hash", &report.dataset_hash);
    push_aggregates(&mut m, &report);
    m.write_next_to(&artifacts)?;

    print_aggregates(&report);
    println!(
        "wrote {} rows ({} failures) to {}",
        report.rows.len(),
        report.failures.len(),
        a.report.display()
    );
    Ok(())
}

fn push_aggregates(m: &mut Manifest, report: &EvalReport) {
    for agg in &report.aggregates {
        m.push(
            &format!("result.{}", agg.class),
            format!(
                "count={} estimated={} err_c={:.6} err_theta_deg={:.6} iou={:.6}",
                agg.count, agg.estimated, agg.mean_err_c, agg.mean_abs_err_theta_deg, agg.mean_iou
            ),
        );
    }
}

fn print_aggregates(report: &EvalReport) {
    println!("method {}", report.method);
    for agg in &report.aggregates {
        println!(
            "{}: count {} estimated {} err_c {:.4} |err_theta| {:.3} deg iou {:.4}",
            agg.class, agg.count, agg.estimated, agg.mean_err_c, agg.mean_abs_err_theta_deg,
            agg.mean_iou
        );
    }
}

/// Parses a grid spec like `angle=direct,sincos2;center=mean;concat=on,off;
/// scale=1,1/16`. Omitted axes keep the single default value.
fn parse_grid(spec: &str) -> Result<AblationGrid, String> {
    let mut g = AblationGrid {
        angle_modes: vec![AngleMode::SinCos2],
        center_modes: vec![CenterMode::Mean],
        concat: vec![true],
        scales: vec![1.0],
    };
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let (axis, vals) = part
            .split_once('=')
            .ok_or_else(|| format!("grid axis {part:?} is not of the form axis=v1,v2"))?;
        let vals: Vec<&str> = vals.split(',').map(str::trim).collect();
        if vals.iter().any(|v| v.is_empty()) {
            return Err(format!("grid axis {axis:?} has an empty value"));
        }
        match axis.trim() {
            "angle" => {
                g.angle_modes = vals
                    .iter()
                    .map(|v| match *v {
                        "direct" => Ok(AngleMode::Direct),
                        "sincos" => Ok(AngleMode::SinCos),
                        "sincos2" => Ok(AngleMode::SinCos2),
                        other => Err(format!("unknown angle mode {other:?}")),
                    })
                    .collect::<Result<_, _>>()?;
            }
            "center" => {
                g.center_modes = vals
                    .iter()
                    .map(|v| match *v {
                        "none" => Ok(CenterMode::None),
                        "mean" => Ok(CenterMode::Mean),
                        "median" => Ok(CenterMode::Median),
                        other => Err(format!("unknown center mode {other:?}")),
                    })
                    .collect::<Result<_, _>>()?;
            }
            "concat" => {
                g.concat = vals
                    .iter()
                    .map(|v| match *v {
                        "on" => Ok(true),
                        "off" => Ok(false),
                        other => Err(format!("concat takes on or off, got {other:?}")),
                    })
                    .collect::<Result<_, _>>()?;
            }
            "scale" => {
                g.scales = vals
                    .iter()
                    .map(|v| parse_scale(v))
                    .collect::<Result<_, _>>()?;
            }
            other => return Err(format!("unknown grid axis {other:?}")),
        }
    }
    Ok(g)
}

#[derive(Args)]
pub(crate) struct AblateArgs {
    /// Training cloud file.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    /// Test cloud file, also used as validation during training.
    #[arg(long, value_name = "FILE")]
    test: PathBuf,
    /// Axes to sweep, e.g. `angle=direct,sincos,sincos2;scale=1,1/16`.
    /// Omitted axes stay at angle=sincos2, center=mean, concat=on, scale=1.
    #[arg(long, value_name = "SPEC", value_parser = parse_grid)]
    grid: AblationGrid,
    /// Output directory for ablation.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_name = "S")]
    seed: u64,
    /// Training epochs per cell.
    #[arg(long, value_name = "N", default_value_t = 400)]
    epochs: usize,
    #[arg(long, value_name = "B", default_value_t = 32)]
    batch: usize,
}

pub(crate) fn ablate_cmd(a: AblateArgs, argv: &[String]) -> Result<()> {
    require_file(&a.train)?;
    require_file(&a.test)?;
    let train_samples = read_pbev(&a.train)?;
    let test_samples = read_pbev(&a.test)?;
    let base = NetworkConfig::default();
    let train_cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
        ..TrainConfig::default()
    };

    let mut m = Manifest::begin(argv);
    m.push("seed", a.seed);
    m.push("config.epochs", a.epochs);
    m.push("config.batch", a.batch);
    m.hash_file("dataset.train", &a.train)?;
    m.hash_file("dataset.test", &a.test)?;

    let report = ablate(&a.grid, &train_samples, &test_samples, &base, &train_cfg, a.seed)?;
    for c in &report.cells {
        match &c.outcome {
            Ok(o) => println!(
                "cell angle={} center={} concat={} scale={}: err_c {:.4} |err_theta| {:.3} deg iou {:.4} (epoch {})",
                c.angle_mode,
                c.center_mode,
                if c.concat_enabled { "on" } else { "off" },
                c.scale,
                o.mean_err_c,
                o.mean_abs_err_theta_deg,
                o.mean_iou,
                o.best_epoch
            ),
            Err(e) => println!(
                "cell angle={} center={} concat={} scale={}: failed: {e}",
                c.angle_mode,
                c.center_mode,
                if c.concat_enabled { "on" } else { "off" },
                c.scale
            ),
        }
    }

    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("creating output directory {}", a.out.display()))?;
    let csv_path = a.out.join("ablation.csv");
    atomic_write(&csv_path, report.to_csv().as_bytes())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    m.push("result.cells", report.cells.len());
    m.write_next_to(&[&csv_path])?;
    println!("wrote {} cells to {}", report.cells.len(), csv_path.display());
    Ok(())
}

#[derive(Args)]
pub(crate) struct TimeArgs {
    /// Checkpoint to time.
    #[arg(long, value_name = "CKPT")]
    ckpt: PathBuf,
    /// Cloud file; the first sample's resampled cloud is timed.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Clouds per forward pass.
    #[arg(long, value_name = "B")]
    batch: usize,
    /// Timed repetitions after warmup.
    #[arg(long, value_name = "N")]
    reps: usize,
    /// Cloud resampling seed.
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
}

pub(crate) fn time_cmd(a: TimeArgs, _argv: &[String]) -> Result<()> {
    require_file(&a.ckpt)?;
    require_file(&a.data)?;
    let (params, cfg) = load_checkpoint(&a.ckpt)?;
    let samples = read_pbev(&a.data)?;
    let first = samples
        .first()
        .ok_or_else(|| anyhow!("dataset {} is empty", a.data.display()))?;
    let cloud = resample(first, RESAMPLE_N, a.seed)?;
    if a.batch == 0 || a.reps == 0 {
        bail!(Usage("batch and reps must be positive".into()));
    }
    let t = time_inference(&params, &cfg, &cloud.points, a.batch, a.reps)?;
    println!(
        "batch_size={} reps={} mean_ms_per_batch={:.4} std_ms_per_batch={:.4} mean_ms_per_cloud={:.4}",
        t.batch_size, t.reps, t.mean_ms_per_batch, t.std_ms_per_batch, t.mean_ms_per_cloud
    );
    Ok(())
}
