//! The training loop: shuffled mini-batches, Adam with exponential
//! learning-rate decay, a rising batch-norm momentum schedule, and
//! per-epoch validation that keeps the parameters with the best mean IoU.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, bn_momentum, AdamState};
use super::forward::{backward, forward, update_running_stats, Mode};
use super::params::{init_params, NetworkParams};
use super::{build_targets, loss_and_grads, predict_batch, NetworkConfig, NetworkError};
use crate::dataset::ResampledSample;
use crate::geometry::{center_error, iou, orientation_error, Point2};

/// Validation predictions run in groups of this many clouds.
const VAL_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Initial learning rate.
    pub lr0: f64,
    /// Multiplicative decay applied every `lr_decay_steps` steps.
    pub lr_decay_rate: f64,
    pub lr_decay_steps: f64,
    /// Batch-norm momentum schedule endpoints.
    pub bn_decay_start: f64,
    pub bn_decay_end: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            batch_size: 32,
            lr0: 0.005,
            lr_decay_rate: 0.7,
            lr_decay_steps: 250_000.0,
            bn_decay_start: 0.5,
            bn_decay_end: 0.99,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |msg: String| Err(NetworkError::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return bad(format!("initial learning rate must be positive, got {}", self.lr0));
        }
        if !(self.lr_decay_rate > 0.0 && self.lr_decay_rate <= 1.0) {
            return bad(format!(
                "learning-rate decay must be in (0, 1], got {}",
                self.lr_decay_rate
            ));
        }
        if !(self.lr_decay_steps.is_finite() && self.lr_decay_steps > 0.0) {
            return bad(format!(
                "decay steps must be positive, got {}",
                self.lr_decay_steps
            ));
        }
        for (name, v) in [
            ("bn_decay_start", self.bn_decay_start),
            ("bn_decay_end", self.bn_decay_end),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1), got {v}"));
            }
        }
        if self.bn_decay_end < self.bn_decay_start {
            return bad(format!(
                "bn_decay_end {} is below bn_decay_start {}",
                self.bn_decay_end, self.bn_decay_start
            ));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean training loss over the epoch's steps.
    pub train_loss: f64,
    /// Mean center error over decoded validation samples, meters.
    pub val_err_c: f64,
    /// Mean absolute orientation error over decoded validation samples,
    /// degrees.
    pub val_err_theta_deg: f64,
    /// Mean IoU over all validation samples (failed decodes count 0).
    pub val_iou: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation IoU.
    pub params: NetworkParams,
    pub log: Vec<EpochLog>,
    /// 1-based epoch the returned parameters come from; ties keep the
    /// earliest epoch.
    pub best_epoch: usize,
}

/// Trains a fresh network on `train_data`, validating on `val_data` after
/// every epoch. Both sets must be non-empty; samples are expected to be
/// resampled to a fixed point count so batches stack.
pub fn train(
    train_data: &[ResampledSample],
    val_data: &[ResampledSample],
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, NetworkError> {
    cfg.validate()?;
    if train_data.is_empty() {
        return Err(NetworkError::InvalidInput("empty training set".into()));
    }
    if val_data.is_empty() {
        return Err(NetworkError::InvalidInput("empty validation set".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init_seed: u64 = master.random();
    let shuffle_seed: u64 = master.random();
    let mut params = init_params(net_cfg, init_seed)?;
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);

    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, NetworkParams, usize)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let n_chunks = order.chunks(cfg.batch_size).len();
        let mut loss_sum = 0.0;
        let mut steps = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            // A trailing single-sample batch is skipped when the epoch has
            // other batches: its batch-norm statistics are degenerate.
            if chunk.len() == 1 && n_chunks > 1 {
                continue;
            }
            let batch: Vec<&ResampledSample> = chunk.iter().map(|&i| &train_data[i]).collect();
            let clouds: Vec<&[Point2]> = batch.iter().map(|s| s.points.as_slice()).collect();
            let targets = build_targets(&batch, net_cfg)?;
            let (pred, cache) = forward(&params, net_cfg, &clouds, Mode::Train)?;
            let cache = cache.expect("train mode fills the cache");
            let (loss, d_out) = loss_and_grads(&pred, &targets, net_cfg)?;
            let momentum = bn_momentum(cfg, params.step());
            update_running_stats(&mut params, &cache, momentum)?;
            let grads = backward(&params, net_cfg, cache, &d_out)?;
            adam_step(&mut params, &grads, &mut adam, cfg)?;
            loss_sum += loss;
            steps += 1;
        }
        let (val_err_c, val_err_theta_deg, val_iou) = validate(&params, net_cfg, val_data)?;
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / steps as f64,
            val_err_c,
            val_err_theta_deg,
            val_iou,
        });
        if best.as_ref().is_none_or(|(b, _, _)| val_iou > *b) {
            best = Some((val_iou, params.clone(), epoch));
        }
    }

    let (_, best_params, best_epoch) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        log,
        best_epoch,
    })
}

/// Mean center error and |orientation error| over decoded samples, and
/// mean IoU over all samples with failed decodes scored 0.
fn validate(
    params: &NetworkParams,
    net_cfg: &NetworkConfig,
    val_data: &[ResampledSample],
) -> Result<(f64, f64, f64), NetworkError> {
    let mut err_c_sum = 0.0;
    let mut err_t_sum = 0.0;
    let mut decoded = 0usize;
    let mut iou_sum = 0.0;
    for group in val_data.chunks(VAL_CHUNK) {
        let clouds: Vec<&[Point2]> = group.iter().map(|s| s.points.as_slice()).collect();
        let results = predict_batch(params, net_cfg, &clouds)?;
        for (sample, result) in group.iter().zip(results) {
            if let Ok(pred) = result {
                err_c_sum += center_error(&pred, &sample.gt);
                err_t_sum += orientation_error(&pred, &sample.gt).abs().to_degrees();
                iou_sum += iou(&pred, &sample.gt);
                decoded += 1;
            }
        }
    }
    Ok((
        err_c_sum / decoded as f64,
        err_t_sum / decoded as f64,
        iou_sum / val_data.len() as f64,
    ))
}
