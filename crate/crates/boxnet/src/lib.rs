//! Oriented bounding-box estimation from bird's-eye-view point clouds.
//!
//! The crate provides the full pipeline: box geometry and metrics
//! ([`geometry`]), dataset handling with a text interchange format plus
//! synthetic and KITTI sources ([`dataset`]), a search-based L-shape fitting
//! baseline ([`slf`]), a point-network regressor trained with hand-written
//! backpropagation ([`network`]), and an evaluation/ablation/timing harness
//! ([`harness`]).

pub mod dataset;
pub mod geometry;
pub mod harness;
pub mod network;
pub mod slf;
pub mod util;

pub use dataset::{
    cloud_mean, cloud_median, generate_synthetic, ingest_kitti, read_pbev, resample,
    resample_all, split_samples, write_pbev, ClassChoice, ClassLabel, DatasetError,
    DatasetSplit, ResampledSample, Sample, SynthConfig, VisibilityMode, RESAMPLE_N,
};
pub use geometry::{
    box_corners, center_error, contains_point, iou, normalize_angle, orientation_error,
    GeometryError, OrientedBox, Point2,
};
pub use harness::{
    ablate, evaluate, histogram, time_inference, AblationCell, AblationGrid, AblationOutcome,
    AblationReport, Aggregate, BoxEstimator, BoxNetEstimator, EvalReport, EvalRow, HarnessError,
    Histogram, HistogramBin, HistogramMetric, SlfEstimator, TimingReport,
};
pub use network::{
    adam_step, backward, bn_momentum, build_targets, encode_angle, forward, init_params,
    learning_rate, load_checkpoint, loss_and_grads, predict, predict_batch, recover_theta,
    save_checkpoint, train, update_running_stats, AdamState, AngleMode, CenterMode, EpochLog,
    ForwardCache, Gradients, HeadGrads, LossKind, LossWeights, Mode, NetworkConfig, NetworkError,
    NetworkParams, Predictions, Targets, TrainConfig, TrainOutcome,
};
pub use slf::{slf_fit, SlfConfig, SlfCriterion, SlfError};
