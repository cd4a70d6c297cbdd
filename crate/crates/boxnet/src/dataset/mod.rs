//! Samples, dataset transforms, and the data sources (synthetic + KITTI).

mod kitti;
mod pbev;
mod synth;

pub use kitti::ingest_kitti;
pub use pbev::{read_pbev, write_pbev, write_pbev_string};
pub use synth::{generate_synthetic, ClassChoice, SynthConfig, VisibilityMode};

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{OrientedBox, Point2};

/// Fixed cloud size the network consumes.
pub const RESAMPLE_N: usize = 512;
/// Samples must hold strictly more points than this at generation/ingestion.
pub const MIN_SAMPLE_POINTS: usize = 30;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("frame {frame}: {msg}")]
    Ingest { frame: String, msg: String },
}

/// Object class of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Car,
    Pedestrian,
    Cyclist,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [
        ClassLabel::Car,
        ClassLabel::Pedestrian,
        ClassLabel::Cyclist,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Car => "car",
            ClassLabel::Pedestrian => "pedestrian",
            ClassLabel::Cyclist => "cyclist",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "car" => Ok(ClassLabel::Car),
            "pedestrian" => Ok(ClassLabel::Pedestrian),
            "cyclist" => Ok(ClassLabel::Cyclist),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

/// One labeled object: its bird's-eye-view points and ground-truth box.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub class_label: ClassLabel,
    pub points: Vec<Point2>,
    pub gt: OrientedBox,
}

/// A sample whose cloud has been resampled to a fixed point count.
/// Every point is drawn from the source sample's point multiset.
#[derive(Debug, Clone)]
pub struct ResampledSample {
    pub id: String,
    pub class_label: ClassLabel,
    pub points: Vec<Point2>,
    pub gt: OrientedBox,
}

/// A deterministic train/test partition.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub seed: u64,
}

/// Draws exactly `n` points from `s`: without replacement when the cloud has
/// at least `n` points, otherwise all points plus draws with replacement.
pub fn resample(s: &Sample, n: usize, seed: u64) -> Result<ResampledSample, DatasetError> {
    if n == 0 {
        return Err(DatasetError::InvalidArgument(
            "resample size must be positive".into(),
        ));
    }
    if s.points.is_empty() {
        return Err(DatasetError::InvalidArgument(format!(
            "sample {:?} has no points",
            s.id
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point2> = if s.points.len() >= n {
        rand::seq::index::sample(&mut rng, s.points.len(), n)
            .iter()
            .map(|i| s.points[i])
            .collect()
    } else {
        let mut v = s.points.clone();
        while v.len() < n {
            v.push(s.points[rng.random_range(0..s.points.len())]);
        }
        v
    };
    Ok(ResampledSample {
        id: s.id.clone(),
        class_label: s.class_label,
        points,
        gt: s.gt,
    })
}

/// Resamples every sample to `n` points with per-sample seeds derived from
/// `seed`.
pub fn resample_all(
    samples: &[Sample],
    n: usize,
    seed: u64,
) -> Result<Vec<ResampledSample>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples
        .iter()
        .map(|s| {
            let sub = rng.random::<u64>();
            resample(s, n, sub)
        })
        .collect()
}

/// Componentwise mean of a cloud.
///
/// Each coordinate is summed in ascending order, so the result is identical
/// for any permutation of the input. Panics on an empty cloud.
pub fn cloud_mean(points: &[Point2]) -> Point2 {
    assert!(!points.is_empty(), "cloud_mean of empty cloud");
    Point2::new(
        sorted_sum(points.iter().map(|p| p.x)) / points.len() as f64,
        sorted_sum(points.iter().map(|p| p.y)) / points.len() as f64,
    )
}

/// Componentwise median of a cloud; an even count averages the two middle
/// values. Panics on an empty cloud.
pub fn cloud_median(points: &[Point2]) -> Point2 {
    assert!(!points.is_empty(), "cloud_median of empty cloud");
    Point2::new(
        median_of(points.iter().map(|p| p.x)),
        median_of(points.iter().map(|p| p.y)),
    )
}

fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Shuffles deterministically and splits so that `round(ratio * n)` samples
/// land in `train`.
pub fn split_samples(
    samples: Vec<Sample>,
    ratio: f64,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if samples.is_empty() {
        return Err(DatasetError::InvalidArgument("empty dataset".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidArgument(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    check_unique_ids(&samples)?;
    let mut samples = samples;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates over the sample vector.
    for i in (1..samples.len()).rev() {
        let j = rng.random_range(0..=i);
        samples.swap(i, j);
    }
    let n_train = ((samples.len() as f64) * ratio).round() as usize;
    let n_train = n_train.clamp(1, samples.len() - 1);
    let test = samples.split_off(n_train);
    Ok(DatasetSplit {
        train: samples,
        test,
        seed,
    })
}

pub(crate) fn check_unique_ids(samples: &[Sample]) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    for s in samples {
        if !seen.insert(s.id.as_str()) {
            return Err(DatasetError::DuplicateId(s.id.clone()));
        }
    }
    Ok(())
}
