//! Evaluation machinery: a common estimator interface over the network and
//! the L-shape baseline, per-sample and per-class metric reports with CSV
//! export, error histograms, configuration ablation sweeps, and inference
//! timing.

use std::time::Instant;

use thiserror::Error;

use crate::dataset::{
    check_unique_ids, resample, ClassLabel, DatasetError, Sample, RESAMPLE_N,
};
use crate::geometry::{center_error, iou, orientation_error, OrientedBox, Point2};
use crate::network::{
    forward, loss_and_grads, predict_batch, train, AngleMode, CenterMode, LossKind,
    Mode, NetworkConfig, NetworkError, NetworkParams, Targets, TrainConfig,
};
use crate::slf::{slf_fit, SlfConfig};
use crate::util::Fnv1a;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Inference batch size used when an estimator runs the network.
const ESTIMATE_CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Anything that turns point clouds into oriented boxes.
pub trait BoxEstimator {
    /// Short method name for reports, e.g. `boxnet` or `slf-closeness`.
    fn name(&self) -> String;
    /// Stable one-line description of the configuration, hashed into
    /// reports so runs are attributable.
    fn config_summary(&self) -> String;
    /// One estimate per sample, in order; failures carry a message.
    fn estimate_all(&self, samples: &[Sample], seed: u64) -> Vec<Result<OrientedBox, String>>;
}

/// The trained network as an estimator. Clouds are resampled to
/// [`RESAMPLE_N`] points (seeded, per sample) and run in batches.
pub struct BoxNetEstimator {
    params: NetworkParams,
    cfg: NetworkConfig,
}

impl BoxNetEstimator {
    pub fn new(params: NetworkParams, cfg: NetworkConfig) -> Result<Self, HarnessError> {
        // Surface shape mismatches at construction, not per sample.
        forward_check(&params, &cfg)?;
        Ok(BoxNetEstimator { params, cfg })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }
}

fn forward_check(params: &NetworkParams, cfg: &NetworkConfig) -> Result<(), NetworkError> {
    let probe = [Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)];
    forward(params, cfg, &[&probe], Mode::Infer).map(|_| ())
}

impl BoxEstimator for BoxNetEstimator {
    fn name(&self) -> String {
        "boxnet".into()
    }

    fn config_summary(&self) -> String {
        let c = &self.cfg;
        format!(
            "boxnet angle={} center={} concat={} scale={} loss={} step={}",
            c.angle_mode,
            c.center_mode,
            if c.concat_enabled { "on" } else { "off" },
            c.scale,
            c.loss_kind,
            self.params.step(),
        )
    }

    fn estimate_all(&self, samples: &[Sample], seed: u64) -> Vec<Result<OrientedBox, String>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clouds = Vec::with_capacity(samples.len());
        let mut out: Vec<Result<OrientedBox, String>> = Vec::with_capacity(samples.len());
        for s in samples {
            match resample(s, RESAMPLE_N, rng.random()) {
                Ok(r) => {
                    clouds.push(Some(r.points));
                    out.push(Err("pending".into()));
                }
                Err(e) => {
                    clouds.push(None);
                    out.push(Err(e.to_string()));
                }
            }
        }
        // Batch the resampled clouds, skipping resample failures.
        let index: Vec<usize> = (0..samples.len()).filter(|&i| clouds[i].is_some()).collect();
        for chunk in index.chunks(ESTIMATE_CHUNK) {
            let batch: Vec<&[Point2]> = chunk
                .iter()
                .map(|&i| clouds[i].as_ref().expect("filtered").as_slice())
                .collect();
            match predict_batch(&self.params, &self.cfg, &batch) {
                Ok(results) => {
                    for (&i, r) in chunk.iter().zip(results) {
                        out[i] = r.map_err(|e| e.to_string());
                    }
                }
                Err(e) => {
                    let msg = e.to_string();
                    for &i in chunk {
                        out[i] = Err(msg.clone());
                    }
                }
            }
        }
        out
    }
}

/// The search-based L-shape fit as an estimator; runs on the raw points.
pub struct SlfEstimator {
    cfg: SlfConfig,
}

impl SlfEstimator {
    pub fn new(cfg: SlfConfig) -> Self {
        SlfEstimator { cfg }
    }
}

impl BoxEstimator for SlfEstimator {
    fn name(&self) -> String {
        format!("slf-{}", self.cfg.criterion)
    }

    fn config_summary(&self) -> String {
        format!(
            "slf criterion={} step={} d0={}",
            self.cfg.criterion, self.cfg.step, self.cfg.d0
        )
    }

    fn estimate_all(&self, samples: &[Sample], _seed: u64) -> Vec<Result<OrientedBox, String>> {
        samples
            .iter()
            .map(|s| slf_fit(&s.points, &self.cfg).map_err(|e| e.to_string()))
            .collect()
    }
}

/// Metrics for one successfully estimated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub id: String,
    pub class_label: ClassLabel,
    /// Center distance, meters.
    pub err_c: f64,
    /// Signed orientation error, degrees.
    pub err_theta_deg: f64,
    pub iou: f64,
}

/// Per-class metric means. `class` is a label name or `all`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub class: String,
    /// Samples of the class, estimated or not.
    pub count: usize,
    /// Samples with a usable estimate.
    pub estimated: usize,
    /// Mean center error over estimated samples, meters.
    pub mean_err_c: f64,
    /// Mean absolute orientation error over estimated samples, degrees.
    pub mean_abs_err_theta_deg: f64,
    /// Mean IoU over all samples of the class; failures score 0.
    pub mean_iou: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: String,
    /// FNV-1a of the estimator's configuration summary.
    pub config_hash: String,
    /// FNV-1a of the evaluated samples (ids, classes, points, boxes).
    pub dataset_hash: String,
    pub rows: Vec<EvalRow>,
    pub aggregates: Vec<Aggregate>,
    /// (sample id, message) for estimates that failed.
    pub failures: Vec<(String, String)>,
}

impl EvalReport {
    pub fn aggregate(&self, class: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.class == class)
    }

    /// Per-sample metrics as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,class,err_c,err_theta_deg,iou\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.id, r.class_label, r.err_c, r.err_theta_deg, r.iou
            ));
        }
        out
    }
}

/// Runs an estimator over a dataset and collects per-sample metrics,
/// per-class means, and failures.
pub fn evaluate(
    estimator: &dyn BoxEstimator,
    samples: &[Sample],
    seed: u64,
) -> Result<EvalReport, HarnessError> {
    if samples.is_empty() {
        return Err(HarnessError::InvalidArgument(
            "cannot evaluate an empty dataset".into(),
        ));
    }
    check_unique_ids(samples)?;
    let estimates = estimator.estimate_all(samples, seed);
    if estimates.len() != samples.len() {
        return Err(HarnessError::InvalidArgument(format!(
            "estimator returned {} results for {} samples",
            estimates.len(),
            samples.len()
        )));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (s, e) in samples.iter().zip(&estimates) {
        match e {
            Ok(pred) => rows.push(EvalRow {
                id: s.id.clone(),
                class_label: s.class_label,
                err_c: center_error(pred, &s.gt),
                err_theta_deg: orientation_error(pred, &s.gt).to_degrees(),
                iou: iou(pred, &s.gt),
            }),
            Err(msg) => failures.push((s.id.clone(), msg.clone())),
        }
    }
    let mut aggregates = Vec::new();
    for label in ClassLabel::ALL {
        if let Some(a) = aggregate_class(samples, &rows, Some(label)) {
            aggregates.push(a);
        }
    }
    aggregates.push(aggregate_class(samples, &rows, None).expect("dataset is non-empty"));
    Ok(EvalReport {
        method: estimator.name(),
        config_hash: hash_str(&estimator.config_summary()),
        dataset_hash: hash_samples(samples),
        rows,
        aggregates,
        failures,
    })
}

/// Means for one class, or for every sample when `label` is `None`.
/// Returns `None` when the dataset holds no sample of the class.
fn aggregate_class(samples: &[Sample], rows: &[EvalRow], label: Option<ClassLabel>) -> Option<Aggregate> {
    let keep = |c: ClassLabel| label.is_none_or(|l| l == c);
    let count = samples.iter().filter(|s| keep(s.class_label)).count();
    if count == 0 {
        return None;
    }
    let sel: Vec<&EvalRow> = rows.iter().filter(|r| keep(r.class_label)).collect();
    let n = sel.len() as f64;
    Some(Aggregate {
        class: label.map_or("all".into(), |l| l.to_string()),
        count,
        estimated: sel.len(),
        mean_err_c: sel.iter().map(|r| r.err_c).sum::<f64>() / n,
        mean_abs_err_theta_deg: sel.iter().map(|r| r.err_theta_deg.abs()).sum::<f64>() / n,
        mean_iou: sel.iter().map(|r| r.iou).sum::<f64>() / count as f64,
    })
}

fn hash_str(s: &str) -> String {
    let mut h = Fnv1a::new();
    h.write(s.as_bytes());
    h.finish_hex()
}

fn hash_samples(samples: &[Sample]) -> String {
    let mut h = Fnv1a::new();
    for s in samples {
        h.write(s.id.as_bytes());
        h.write(s.class_label.as_str().as_bytes());
        for v in [s.gt.cx, s.gt.cy, s.gt.w, s.gt.l, s.gt.theta] {
            h.write_f64(v);
        }
        for p in &s.points {
            h.write_f64(p.x);
            h.write_f64(p.y);
        }
    }
    h.finish_hex()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramMetric {
    ErrC,
    ErrThetaDeg,
    Iou,
}

impl HistogramMetric {
    fn pick(self, row: &EvalRow) -> f64 {
        match self {
            HistogramMetric::ErrC => row.err_c,
            HistogramMetric::ErrThetaDeg => row.err_theta_deg,
            HistogramMetric::Iou => row.iou,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    /// Inclusive lower edge; the bin covers `[lo, lo + bin_width)`.
    pub lo: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub metric: HistogramMetric,
    pub bin_width: f64,
    /// Contiguous bins from the lowest to the highest occupied one;
    /// interior bins may hold zero.
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,count\n");
        for b in &self.bins {
            out.push_str(&format!("{},{}\n", b.lo, b.count));
        }
        out
    }
}

/// Bins one metric of a report at the given width. Bin edges are multiples
/// of the width, so zero always falls on an edge.
pub fn histogram(
    report: &EvalReport,
    metric: HistogramMetric,
    bin_width: f64,
) -> Result<Histogram, HarnessError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(HarnessError::InvalidArgument(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    if report.rows.is_empty() {
        return Ok(Histogram {
            metric,
            bin_width,
            bins: Vec::new(),
        });
    }
    let idx = |v: f64| (v / bin_width).floor() as i64;
    let values: Vec<f64> = report.rows.iter().map(|r| metric.pick(r)).collect();
    let lo = values.iter().copied().map(idx).min().expect("non-empty");
    let hi = values.iter().copied().map(idx).max().expect("non-empty");
    let span = hi - lo + 1;
    if span > 1_000_000 {
        return Err(HarnessError::InvalidArgument(format!(
            "{span} bins of width {bin_width}; widen the bins"
        )));
    }
    let mut counts = vec![0usize; span as usize];
    for v in values {
        counts[(idx(v) - lo) as usize] += 1;
    }
    Ok(Histogram {
        metric,
        bin_width,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                lo: (lo + i as i64) as f64 * bin_width,
                count,
            })
            .collect(),
    })
}

/// The axes an ablation sweep varies; the sweep runs their cartesian
/// product.
#[derive(Debug, Clone)]
pub struct AblationGrid {
    pub angle_modes: Vec<AngleMode>,
    pub center_modes: Vec<CenterMode>,
    pub concat: Vec<bool>,
    pub scales: Vec<f64>,
}

impl Default for AblationGrid {
    fn default() -> Self {
        AblationGrid {
            angle_modes: AngleMode::ALL.to_vec(),
            center_modes: CenterMode::ALL.to_vec(),
            concat: vec![true, false],
            scales: vec![1.0],
        }
    }
}

/// Test-set results of one trained cell.
#[derive(Debug, Clone)]
pub struct AblationOutcome {
    /// Mean-squared evaluation loss on the test set, computed in
    /// inference mode regardless of the training loss.
    pub eval_loss: f64,
    pub mean_err_c: f64,
    pub mean_abs_err_theta_deg: f64,
    pub mean_iou: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct AblationCell {
    pub angle_mode: AngleMode,
    pub center_mode: CenterMode,
    pub concat_enabled: bool,
    pub scale: f64,
    pub outcome: Result<AblationOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("angle_mode,center_mode,concat,scale,eval_loss,err_c,err_theta_deg,iou,best_epoch,error\n");
        for c in &self.cells {
            let head = format!(
                "{},{},{},{}",
                c.angle_mode,
                c.center_mode,
                if c.concat_enabled { "on" } else { "off" },
                c.scale
            );
            match &c.outcome {
                Ok(o) => out.push_str(&format!(
                    "{head},{},{},{},{},{},\n",
                    o.eval_loss, o.mean_err_c, o.mean_abs_err_theta_deg, o.mean_iou, o.best_epoch
                )),
                Err(e) => out.push_str(&format!("{head},,,,,,{}\n", e.replace(',', ";"))),
            }
        }
        out
    }

    /// The cell matching the given axes, if the grid contained it.
    pub fn cell(
        &self,
        angle: AngleMode,
        center: CenterMode,
        concat: bool,
        scale: f64,
    ) -> Option<&AblationCell> {
        self.cells.iter().find(|c| {
            c.angle_mode == angle
                && c.center_mode == center
                && c.concat_enabled == concat
                && c.scale == scale
        })
    }
}

/// Trains and evaluates every cell of the grid on the same split. Training
/// failures land in the cell, not in the returned error. Validation during
/// training uses the test set, and every cell sees identical resampled
/// clouds and seeds.
pub fn ablate(
    grid: &AblationGrid,
    train_samples: &[Sample],
    test_samples: &[Sample],
    base: &NetworkConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<AblationReport, HarnessError> {
    if grid.angle_modes.is_empty()
        || grid.center_modes.is_empty()
        || grid.concat.is_empty()
        || grid.scales.is_empty()
    {
        return Err(HarnessError::InvalidArgument(
            "every ablation axis needs at least one value".into(),
        ));
    }
    let train_rs = crate::dataset::resample_all(train_samples, RESAMPLE_N, seed)?;
    let test_rs = crate::dataset::resample_all(test_samples, RESAMPLE_N, seed.wrapping_add(1))?;
    let mut cells = Vec::new();
    for &angle_mode in &grid.angle_modes {
        for &center_mode in &grid.center_modes {
            for &concat_enabled in &grid.concat {
                for &scale in &grid.scales {
                    let net = NetworkConfig {
                        angle_mode,
                        center_mode,
                        concat_enabled,
                        scale,
                        ..*base
                    };
                    let outcome = run_cell(&net, &train_rs, &test_rs, train_cfg)
                        .map_err(|e| e.to_string());
                    cells.push(AblationCell {
                        angle_mode,
                        center_mode,
                        concat_enabled,
                        scale,
                        outcome,
                    });
                }
            }
        }
    }
    Ok(AblationReport { cells })
}

fn run_cell(
    net: &NetworkConfig,
    train_rs: &[crate::dataset::ResampledSample],
    test_rs: &[crate::dataset::ResampledSample],
    train_cfg: &TrainConfig,
) -> Result<AblationOutcome, NetworkError> {
    let out = train(train_rs, test_rs, net, train_cfg)?;
    let best = &out.log[out.best_epoch - 1];
    Ok(AblationOutcome {
        eval_loss: evaluation_loss(&out.params, net, test_rs)?,
        mean_err_c: best.val_err_c,
        mean_abs_err_theta_deg: best.val_err_theta_deg,
        mean_iou: best.val_iou,
        best_epoch: out.best_epoch,
    })
}

/// Mean-squared loss of inference-mode predictions against the targets.
fn evaluation_loss(
    params: &NetworkParams,
    net: &NetworkConfig,
    test_rs: &[crate::dataset::ResampledSample],
) -> Result<f64, NetworkError> {
    let mse = NetworkConfig {
        loss_kind: LossKind::Mse,
        ..*net
    };
    let mut sum = 0.0;
    let mut n = 0usize;
    for chunk in test_rs.chunks(ESTIMATE_CHUNK) {
        let batch: Vec<&crate::dataset::ResampledSample> = chunk.iter().collect();
        let clouds: Vec<&[Point2]> = chunk.iter().map(|s| s.points.as_slice()).collect();
        let targets: Targets = crate::network::build_targets(&batch, &mse)?;
        let (pred, _) = forward(params, &mse, &clouds, Mode::Infer)?;
        let (loss, _) = loss_and_grads(&pred, &targets, &mse)?;
        sum += loss * chunk.len() as f64;
        n += chunk.len();
    }
    Ok(sum / n as f64)
}

/// Wall-clock statistics of repeated batched inference.
#[derive(Debug, Clone, Copy)]
pub struct TimingReport {
    pub batch_size: usize,
    pub reps: usize,
    pub mean_ms_per_batch: f64,
    pub std_ms_per_batch: f64,
    pub mean_ms_per_cloud: f64,
}

/// Times inference on `batch_size` copies of one cloud, `reps` times after
/// ten untimed warmup passes.
pub fn time_inference(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    cloud: &[Point2],
    batch_size: usize,
    reps: usize,
) -> Result<TimingReport, HarnessError> {
    if batch_size == 0 || reps == 0 {
        return Err(HarnessError::InvalidArgument(
            "batch size and repetitions must be positive".into(),
        ));
    }
    let batch: Vec<&[Point2]> = vec![cloud; batch_size];
    for _ in 0..10 {
        forward(params, cfg, &batch, Mode::Infer)?;
    }
    let mut times_ms = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        forward(params, cfg, &batch, Mode::Infer)?;
        times_ms.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    let mean = times_ms.iter().sum::<f64>() / reps as f64;
    let var = times_ms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / reps as f64;
    Ok(TimingReport {
        batch_size,
        reps,
        mean_ms_per_batch: mean,
        std_ms_per_batch: var.sqrt(),
        mean_ms_per_cloud: mean / batch_size as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthConfig};
    use crate::network::init_params;
    use crate::slf::SlfCriterion;

    fn synth(count: usize, seed: u64) -> Vec<Sample> {
        let cfg = SynthConfig {
            noise_m: 0.005,
            ..SynthConfig::default()
        };
        generate_synthetic(&cfg, count, seed).unwrap()
    }

    #[test]
    fn slf_evaluation_produces_sane_aggregates() {
        let samples = synth(20, 3);
        let est = SlfEstimator::new(SlfConfig::default());
        let report = evaluate(&est, &samples, 1).unwrap();
        assert_eq!(report.method, "slf-closeness");
        assert_eq!(report.rows.len() + report.failures.len(), 20);
        let all = report.aggregate("all").unwrap();
        assert_eq!(all.count, 20);
        // Full-visibility clouds with light noise: the baseline should do
        // reasonably well on average.
        assert!(all.mean_iou > 0.5, "mean iou {}", all.mean_iou);
        assert!(all.mean_err_c < 1.0);
        let car = report.aggregate("car").unwrap();
        assert_eq!(car.count, 20);
        assert!(report.aggregate("pedestrian").is_none());
    }

    #[test]
    fn csv_layout_is_stable() {
        let samples = synth(5, 4);
        let est = SlfEstimator::new(SlfConfig::default());
        let report = evaluate(&est, &samples, 1).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("id,class,err_c,err_theta_deg,iou"));
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        let first = lines.next().unwrap();
        assert!(first.starts_with("synth-00000-full,car,"), "{first}");
    }

    struct FailOn<'a> {
        bad_id: &'a str,
    }

    impl BoxEstimator for FailOn<'_> {
        fn name(&self) -> String {
            "failer".into()
        }
        fn config_summary(&self) -> String {
            format!("failer bad_id={}", self.bad_id)
        }
        fn estimate_all(&self, samples: &[Sample], _seed: u64) -> Vec<Result<OrientedBox, String>> {
            samples
                .iter()
                .map(|s| {
                    if s.id == self.bad_id {
                        Err("deliberate failure".into())
                    } else {
                        Ok(s.gt)
                    }
                })
                .collect()
        }
    }

    #[test]
    fn failures_count_as_zero_iou_and_stay_out_of_error_means() {
        let samples = synth(4, 9);
        let est = FailOn {
            bad_id: &samples[1].id.clone(),
        };
        let report = evaluate(&est, &samples, 0).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].1, "deliberate failure");
        let all = report.aggregate("all").unwrap();
        assert_eq!((all.count, all.estimated), (4, 3));
        // Perfect predictions on the three estimated samples.
        assert!(all.mean_err_c < 1e-12);
        assert!((all.mean_iou - 3.0 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn report_hashes_track_config_and_data() {
        let samples = synth(4, 9);
        let a = evaluate(
            &SlfEstimator::new(SlfConfig::default()),
            &samples,
            0,
        )
        .unwrap();
        let b = evaluate(
            &SlfEstimator::new(SlfConfig::with_criterion(SlfCriterion::Area)),
            &samples,
            0,
        )
        .unwrap();
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.dataset_hash, b.dataset_hash);
        let other = synth(4, 10);
        let c = evaluate(&SlfEstimator::new(SlfConfig::default()), &other, 0).unwrap();
        assert_ne!(a.dataset_hash, c.dataset_hash);
    }

    #[test]
    fn histogram_bins_are_contiguous_and_complete() {
        let samples = synth(12, 6);
        let est = SlfEstimator::new(SlfConfig::default());
        let report = evaluate(&est, &samples, 1).unwrap();
        let h = histogram(&report, HistogramMetric::Iou, 0.05).unwrap();
        let total: usize = h.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, report.rows.len());
        for pair in h.bins.windows(2) {
            assert!((pair[1].lo - pair[0].lo - 0.05).abs() < 1e-12);
        }
        for b in &h.bins {
            let scaled = b.lo / 0.05;
            assert!((scaled - scaled.round()).abs() < 1e-9, "edge {}", b.lo);
        }
        let csv = h.to_csv();
        assert!(csv.starts_with("bin_low,count\n"));
        assert_eq!(csv.lines().count(), 1 + h.bins.len());
        assert!(histogram(&report, HistogramMetric::Iou, 0.0).is_err());
    }

    #[test]
    fn histogram_keeps_interior_zero_bins() {
        let samples = synth(2, 6);
        let est = FailOn { bad_id: "none" };
        let mut report = evaluate(&est, &samples, 0).unwrap();
        report.rows[0].err_c = 0.01;
        report.rows[1].err_c = 0.99;
        let h = histogram(&report, HistogramMetric::ErrC, 0.1).unwrap();
        assert_eq!(h.bins.len(), 10);
        assert_eq!(h.bins[0].count, 1);
        assert_eq!(h.bins[9].count, 1);
        assert!(h.bins[1..9].iter().all(|b| b.count == 0));
    }

    #[test]
    fn network_estimator_runs_end_to_end() {
        let cfg = NetworkConfig {
            scale: 1.0 / 16.0,
            ..NetworkConfig::default()
        };
        let params = init_params(&cfg, 1).unwrap();
        let est = BoxNetEstimator::new(params, cfg).unwrap();
        let samples = synth(5, 2);
        let report = evaluate(&est, &samples, 3).unwrap();
        assert_eq!(report.method, "boxnet");
        // An untrained net still decodes somewhere unless the angle
        // encoding lands exactly at the origin.
        assert_eq!(report.rows.len() + report.failures.len(), 5);
    }

    #[test]
    fn estimates_are_deterministic_for_a_seed() {
        let cfg = NetworkConfig {
            scale: 1.0 / 16.0,
            ..NetworkConfig::default()
        };
        let params = init_params(&cfg, 1).unwrap();
        let est = BoxNetEstimator::new(params, cfg).unwrap();
        let samples = synth(6, 2);
        let a = est.estimate_all(&samples, 42);
        let b = est.estimate_all(&samples, 42);
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Ok(p), Ok(q)) => {
                    assert_eq!(p.cx.to_bits(), q.cx.to_bits());
                    assert_eq!(p.theta.to_bits(), q.theta.to_bits());
                }
                (Err(e), Err(f)) => assert_eq!(e, f),
                _ => panic!("determinism broke"),
            }
        }
    }

    #[test]
    fn ablation_covers_the_grid_and_reports_outcomes() {
        let samples = synth(8, 5);
        let (train_s, test_s) = samples.split_at(6);
        let grid = AblationGrid {
            angle_modes: vec![AngleMode::SinCos2],
            center_modes: vec![CenterMode::Mean, CenterMode::None],
            concat: vec![true],
            scales: vec![1.0 / 16.0],
        };
        let tc = TrainConfig {
            epochs: 2,
            batch_size: 4,
            seed: 1,
            ..TrainConfig::default()
        };
        let report = ablate(
            &grid,
            train_s,
            test_s,
            &NetworkConfig::default(),
            &tc,
            11,
        )
        .unwrap();
        assert_eq!(report.cells.len(), 2);
        for cell in &report.cells {
            let o = cell.outcome.as_ref().expect("training succeeds");
            assert!(o.eval_loss.is_finite());
            assert!(o.best_epoch >= 1 && o.best_epoch <= 2);
        }
        assert!(report
            .cell(AngleMode::SinCos2, CenterMode::None, true, 1.0 / 16.0)
            .is_some());
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("angle_mode,center_mode,concat,scale,"));
    }

    #[test]
    fn timing_rejects_zero_reps_and_reports_per_cloud_cost() {
        let cfg = NetworkConfig {
            scale: 1.0 / 16.0,
            ..NetworkConfig::default()
        };
        let params = init_params(&cfg, 1).unwrap();
        let cloud: Vec<Point2> = (0..64)
            .map(|i| Point2::new((i % 8) as f64, (i / 8) as f64))
            .collect();
        assert!(time_inference(&params, &cfg, &cloud, 4, 0).is_err());
        assert!(time_inference(&params, &cfg, &cloud, 0, 3).is_err());
        let t = time_inference(&params, &cfg, &cloud, 4, 3).unwrap();
        assert_eq!((t.batch_size, t.reps), (4, 3));
        assert!(t.mean_ms_per_batch > 0.0);
        assert!(t.mean_ms_per_cloud <= t.mean_ms_per_batch);
    }
}
