//! The point-network box regressor: a shared per-point MLP with global max
//! pooling feeding angle, size, and center regression heads, trained with
//! hand-written backpropagation.
//!
//! Orientation is regressed through an encoding chosen by
//! [`AngleMode`]; the default double-angle encoding (cos 2θ, sin 2θ) is
//! continuous where plain θ wraps at ±π/2. The center head predicts an
//! offset from the cloud mean (or median), and by default the angle and
//! size outputs are concatenated onto the pooled feature before the center
//! head reads it.

mod adam;
mod checkpoint;
mod forward;
mod params;
mod train;

pub use adam::{adam_step, bn_momentum, learning_rate, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use forward::{backward, forward, update_running_stats, ForwardCache, HeadGrads, Mode, Predictions};
pub use params::{init_params, Gradients, NetworkParams};
pub use train::{train, EpochLog, TrainConfig, TrainOutcome};

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use thiserror::Error;

use crate::dataset::{cloud_mean, cloud_median, ResampledSample};
use crate::geometry::{normalize_angle, OrientedBox, Point2};

/// Smallest width/length a prediction may decode to, meters.
pub const MIN_PREDICTED_EXTENT: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("angle encoding (0, 0) cannot be decoded")]
    DegenerateAngle,
    #[error("non-finite gradient in {name}")]
    NonFiniteGradient { name: String },
    #[error("non-finite value in {name} after optimizer step")]
    NonFiniteParam { name: String },
    #[error("{path}: {msg}")]
    Checkpoint { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// How the orientation angle is represented at the network output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMode {
    /// One output: θ itself (tanh-bounded to (−π/2, π/2)).
    Direct,
    /// Two outputs: (cos θ, sin θ).
    SinCos,
    /// Two outputs: (cos 2θ, sin 2θ) — continuous across the ±π/2 wrap.
    SinCos2,
}

impl AngleMode {
    pub const ALL: [AngleMode; 3] = [AngleMode::Direct, AngleMode::SinCos, AngleMode::SinCos2];

    /// Output width of the angle head.
    pub fn dim(self) -> usize {
        match self {
            AngleMode::Direct => 1,
            AngleMode::SinCos | AngleMode::SinCos2 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AngleMode::Direct => "direct",
            AngleMode::SinCos => "sincos",
            AngleMode::SinCos2 => "sincos2",
        }
    }
}

impl fmt::Display for AngleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AngleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(AngleMode::Direct),
            "sincos" => Ok(AngleMode::SinCos),
            "sincos2" => Ok(AngleMode::SinCos2),
            other => Err(format!("unknown angle mode {other:?}")),
        }
    }
}

/// Which cloud statistic the center prediction is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMode {
    /// Absolute center regression, no anchor.
    None,
    Mean,
    Median,
}

impl CenterMode {
    pub const ALL: [CenterMode; 3] = [CenterMode::None, CenterMode::Mean, CenterMode::Median];

    pub fn as_str(self) -> &'static str {
        match self {
            CenterMode::None => "none",
            CenterMode::Mean => "mean",
            CenterMode::Median => "median",
        }
    }
}

impl fmt::Display for CenterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CenterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(CenterMode::None),
            "mean" => Ok(CenterMode::Mean),
            "median" => Ok(CenterMode::Median),
            other => Err(format!("unknown center mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Huber,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Huber => "huber",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "huber" => Ok(LossKind::Huber),
            other => Err(format!("unknown loss {other:?}")),
        }
    }
}

/// Weights of the angle, size, and center terms in the training loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w0: 1.0,
            w1: 2.0,
            w2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub angle_mode: AngleMode,
    pub center_mode: CenterMode,
    /// Feed the angle and size outputs into the center head alongside the
    /// pooled feature.
    pub concat_enabled: bool,
    /// Layer-width multiplier in (0, 1]; scaled widths at or below 1 drop
    /// their layer.
    pub scale: f64,
    pub loss_kind: LossKind,
    pub huber_delta: f64,
    pub loss_weights: LossWeights,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            angle_mode: AngleMode::SinCos2,
            center_mode: CenterMode::Mean,
            concat_enabled: true,
            scale: 1.0,
            loss_kind: LossKind::Mse,
            huber_delta: 1.0,
            loss_weights: LossWeights::default(),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(NetworkError::InvalidConfig(format!(
                "scale must be in (0, 1], got {}",
                self.scale
            )));
        }
        if !(self.huber_delta > 0.0 && self.huber_delta.is_finite()) {
            return Err(NetworkError::InvalidConfig(format!(
                "huber delta must be positive, got {}",
                self.huber_delta
            )));
        }
        let w = self.loss_weights;
        if ![w.w0, w.w1, w.w2]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(NetworkError::InvalidConfig(format!(
                "loss weights must be finite and non-negative, got ({}, {}, {})",
                w.w0, w.w1, w.w2
            )));
        }
        Ok(())
    }
}

/// Encodes an orientation for regression per the angle mode.
pub fn encode_angle(theta: f64, mode: AngleMode) -> Result<Vec<f64>, NetworkError> {
    let theta = normalize_angle(theta)
        .map_err(|e| NetworkError::InvalidInput(e.to_string()))?;
    Ok(match mode {
        AngleMode::Direct => vec![theta],
        AngleMode::SinCos => vec![theta.cos(), theta.sin()],
        AngleMode::SinCos2 => vec![(2.0 * theta).cos(), (2.0 * theta).sin()],
    })
}

/// Decodes a regressed encoding back to an orientation in (−π/2, π/2].
pub fn recover_theta(encoding: &[f64], mode: AngleMode) -> Result<f64, NetworkError> {
    if encoding.len() != mode.dim() {
        return Err(NetworkError::InvalidInput(format!(
            "angle encoding has {} components, mode {mode} wants {}",
            encoding.len(),
            mode.dim()
        )));
    }
    if encoding.iter().any(|v| !v.is_finite()) {
        return Err(NetworkError::InvalidInput(
            "angle encoding is not finite".into(),
        ));
    }
    let wrap = |t: f64| normalize_angle(t).map_err(|e| NetworkError::InvalidInput(e.to_string()));
    match mode {
        AngleMode::Direct => wrap(encoding[0]),
        AngleMode::SinCos => {
            let (c, s) = (encoding[0], encoding[1]);
            if c == 0.0 && s == 0.0 {
                return Err(NetworkError::DegenerateAngle);
            }
            wrap(s.atan2(c))
        }
        AngleMode::SinCos2 => {
            let (c, s) = (encoding[0], encoding[1]);
            if c == 0.0 && s == 0.0 {
                return Err(NetworkError::DegenerateAngle);
            }
            // atan2 lands in (−π, π], so the half angle needs no wrap.
            Ok(s.atan2(c) / 2.0)
        }
    }
}

/// Regression targets for a batch, shaped like the head outputs.
#[derive(Debug, Clone)]
pub struct Targets {
    pub angle: Array2<f64>,
    pub size: Array2<f64>,
    pub center: Array2<f64>,
}

/// Builds targets from ground truth: the angle encoding, (w, l), and the
/// box center relative to the cloud anchor of `cfg.center_mode`.
pub fn build_targets(
    batch: &[&ResampledSample],
    cfg: &NetworkConfig,
) -> Result<Targets, NetworkError> {
    if batch.is_empty() {
        return Err(NetworkError::InvalidInput("empty batch".into()));
    }
    let b = batch.len();
    let mut angle = Array2::zeros((b, cfg.angle_mode.dim()));
    let mut size = Array2::zeros((b, 2));
    let mut center = Array2::zeros((b, 2));
    for (i, s) in batch.iter().enumerate() {
        if s.points.is_empty() {
            return Err(NetworkError::InvalidInput(format!(
                "sample {:?} has no points",
                s.id
            )));
        }
        let enc = encode_angle(s.gt.theta, cfg.angle_mode)?;
        for (j, v) in enc.iter().enumerate() {
            angle[[i, j]] = *v;
        }
        size[[i, 0]] = s.gt.w;
        size[[i, 1]] = s.gt.l;
        let anchor = match cfg.center_mode {
            CenterMode::None => Point2::default(),
            CenterMode::Mean => cloud_mean(&s.points),
            CenterMode::Median => cloud_median(&s.points),
        };
        center[[i, 0]] = s.gt.cx - anchor.x;
        center[[i, 1]] = s.gt.cy - anchor.y;
    }
    Ok(Targets {
        angle,
        size,
        center,
    })
}

/// Weighted regression loss and its gradients at the head outputs:
/// `w0 * L(angle) + w1 * L(size) + w2 * L(center)`, each `L` the
/// per-component mean over the batch of squared error (or Huber).
pub fn loss_and_grads(
    pred: &Predictions,
    targets: &Targets,
    cfg: &NetworkConfig,
) -> Result<(f64, HeadGrads), NetworkError> {
    for (name, p, t) in [
        ("angle", &pred.angle, &targets.angle),
        ("size", &pred.size, &targets.size),
        ("center", &pred.center, &targets.center),
    ] {
        if p.dim() != t.dim() {
            return Err(NetworkError::InvalidInput(format!(
                "{name} prediction is {:?} but target is {:?}",
                p.dim(),
                t.dim()
            )));
        }
    }
    let w = cfg.loss_weights;
    let (la, ga) = group_loss(&pred.angle, &targets.angle, w.w0, cfg);
    let (ls, gs) = group_loss(&pred.size, &targets.size, w.w1, cfg);
    let (lc, gc) = group_loss(&pred.center, &targets.center, w.w2, cfg);
    Ok((
        la + ls + lc,
        HeadGrads {
            angle: ga,
            size: gs,
            center: gc,
        },
    ))
}

fn group_loss(
    pred: &Array2<f64>,
    target: &Array2<f64>,
    weight: f64,
    cfg: &NetworkConfig,
) -> (f64, Array2<f64>) {
    let count = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = pred - target;
    match cfg.loss_kind {
        LossKind::Mse => {
            for g in grad.iter_mut() {
                let e = *g;
                loss += e * e;
                *g = weight * 2.0 * e / count;
            }
        }
        LossKind::Huber => {
            let d = cfg.huber_delta;
            for g in grad.iter_mut() {
                let e = *g;
                if e.abs() <= d {
                    loss += 0.5 * e * e;
                    *g = weight * e / count;
                } else {
                    loss += d * (e.abs() - 0.5 * d);
                    *g = weight * d * e.signum() / count;
                }
            }
        }
    }
    (weight * loss / count, grad)
}

/// Runs inference on one cloud and decodes an oriented box.
pub fn predict(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    cloud: &[Point2],
) -> Result<OrientedBox, NetworkError> {
    predict_batch(params, cfg, &[cloud])?
        .pop()
        .expect("one result per cloud")
}

/// Batched inference; the outer error covers the whole forward pass, inner
/// errors cover per-sample decoding.
pub fn predict_batch(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    clouds: &[&[Point2]],
) -> Result<Vec<Result<OrientedBox, NetworkError>>, NetworkError> {
    let (pred, _) = forward(params, cfg, clouds, Mode::Infer)?;
    let mut out = Vec::with_capacity(clouds.len());
    for i in 0..clouds.len() {
        out.push(decode_prediction(&pred, i, cfg));
    }
    Ok(out)
}

fn decode_prediction(
    pred: &Predictions,
    row: usize,
    cfg: &NetworkConfig,
) -> Result<OrientedBox, NetworkError> {
    let enc: Vec<f64> = pred.angle.row(row).to_vec();
    let theta = recover_theta(&enc, cfg.angle_mode)?;
    let w = pred.size[[row, 0]].max(MIN_PREDICTED_EXTENT);
    let l = pred.size[[row, 1]].max(MIN_PREDICTED_EXTENT);
    let anchor = pred.anchors[row];
    OrientedBox::new(
        pred.center[[row, 0]] + anchor.x,
        pred.center[[row, 1]] + anchor.y,
        w,
        l,
        theta,
    )
    .map_err(|e| NetworkError::InvalidInput(format!("prediction row {row}: {e}")))
}
