//! Synthetic bird's-eye-view samples with class-conditioned size priors and
//! a simulated sensor at the origin.
//!
//! `full` visibility scatters points on all four edges plus interior jitter.
//! `lshape` covers only the one or two edges facing the sensor, and only a
//! partial span of each, anchored at the corner nearest the sensor — the way
//! grazing returns fade out along a side. `single-edge` keeps just the most
//! sensor-facing edge. Boxes are placed at a sampled range and bearing, so
//! coordinates are absolute in the sensor frame.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{ClassLabel, DatasetError, Sample, MIN_SAMPLE_POINTS};
use crate::geometry::{box_corners, OrientedBox, Point2};

/// Which edges of the box produce returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityMode {
    /// All four edges plus interior jitter.
    Full,
    /// The one or two sensor-facing edges, partially covered.
    LShape,
    /// Only the most sensor-facing edge, partially covered.
    SingleEdge,
    /// Per-sample coin flip between `Full` and `LShape`.
    Mixed,
}

impl VisibilityMode {
    fn tag(self) -> &'static str {
        match self {
            VisibilityMode::Full => "full",
            VisibilityMode::LShape => "lshape",
            VisibilityMode::SingleEdge => "single-edge",
            VisibilityMode::Mixed => "mixed",
        }
    }
}

/// Class of each generated sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassChoice {
    Fixed(ClassLabel),
    /// Uniform over the three classes.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub class: ClassChoice,
    pub mode: VisibilityMode,
    /// Standard deviation of isotropic Gaussian noise added to every point,
    /// in meters.
    pub noise_m: f64,
    /// Box centers are placed at a range drawn from this interval, meters.
    pub range_m: (f64, f64),
    /// Poisson mean of the point count per visible edge (and of the interior
    /// count in `full` mode).
    pub points_per_edge: f64,
    /// Fraction of a facing edge that actually produces returns in `lshape`
    /// and `single-edge` modes, drawn uniformly from this interval.
    pub cover_fraction: (f64, f64),
    /// Samples with point count <= this are regenerated.
    pub min_points: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            class: ClassChoice::Fixed(ClassLabel::Car),
            mode: VisibilityMode::Full,
            noise_m: 0.02,
            range_m: (5.0, 40.0),
            points_per_edge: 40.0,
            cover_fraction: (0.4, 0.9),
            min_points: MIN_SAMPLE_POINTS,
        }
    }
}

/// Length and width intervals per class, meters.
fn size_prior(class: ClassLabel) -> ((f64, f64), (f64, f64)) {
    match class {
        ClassLabel::Car => ((3.2, 4.8), (1.5, 1.9)),
        ClassLabel::Pedestrian => ((0.4, 0.9), (0.4, 0.9)),
        ClassLabel::Cyclist => ((1.5, 1.9), (0.4, 0.7)),
    }
}

/// Generates `count` samples. Fixed seeds give bit-identical datasets.
pub fn generate_synthetic(
    cfg: &SynthConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<Sample>, DatasetError> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        samples.push(generate_one(cfg, i, &mut rng)?);
    }
    Ok(samples)
}

fn validate(cfg: &SynthConfig) -> Result<(), DatasetError> {
    let bad = |msg: String| Err(DatasetError::InvalidArgument(msg));
    if !(cfg.noise_m >= 0.0 && cfg.noise_m.is_finite()) {
        return bad(format!("noise must be finite and >= 0, got {}", cfg.noise_m));
    }
    if !(cfg.range_m.0 > 0.0 && cfg.range_m.1 >= cfg.range_m.0) {
        return bad(format!("bad range interval {:?}", cfg.range_m));
    }
    if !(cfg.points_per_edge > 0.0) {
        return bad(format!(
            "points per edge must be positive, got {}",
            cfg.points_per_edge
        ));
    }
    if !(cfg.cover_fraction.0 > 0.0
        && cfg.cover_fraction.1 <= 1.0
        && cfg.cover_fraction.0 <= cfg.cover_fraction.1)
    {
        return bad(format!("bad cover fraction interval {:?}", cfg.cover_fraction));
    }
    Ok(())
}

fn generate_one(
    cfg: &SynthConfig,
    index: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Sample, DatasetError> {
    for _attempt in 0..1000 {
        let class = match cfg.class {
            ClassChoice::Fixed(c) => c,
            ClassChoice::Mixed => ClassLabel::ALL[rng.random_range(0..3)],
        };
        let ((l_lo, l_hi), (w_lo, w_hi)) = size_prior(class);
        let l = rng.random_range(l_lo..=l_hi);
        let w = rng.random_range(w_lo..=w_hi);
        let theta = FRAC_PI_2 - rng.random_range(0.0..PI);
        let range = rng.random_range(cfg.range_m.0..=cfg.range_m.1);
        let bearing = rng.random_range(-PI..PI);
        let gt = OrientedBox::new(
            range * bearing.cos(),
            range * bearing.sin(),
            w,
            l,
            theta,
        )
        .expect("generated box is valid");

        let mode = match cfg.mode {
            VisibilityMode::Mixed => {
                if rng.random_bool(0.5) {
                    VisibilityMode::Full
                } else {
                    VisibilityMode::LShape
                }
            }
            m => m,
        };
        let mut points = scatter_box_points(&gt, Point2::new(0.0, 0.0), mode, cfg, rng);
        if cfg.noise_m > 0.0 {
            let noise = Normal::new(0.0, cfg.noise_m).expect("validated sigma");
            for p in &mut points {
                p.x += noise.sample(rng);
                p.y += noise.sample(rng);
            }
        }
        if points.len() > cfg.min_points {
            return Ok(Sample {
                id: format!("synth-{index:05}-{}", mode.tag()),
                class_label: class,
                points,
                gt,
            });
        }
    }
    Err(DatasetError::InvalidArgument(format!(
        "could not generate more than {} points per sample; raise points_per_edge",
        cfg.min_points
    )))
}

/// Scatters returns for one box as seen from `sensor`. `mode` must be a
/// concrete visibility (not `Mixed`).
pub(crate) fn scatter_box_points(
    gt: &OrientedBox,
    sensor: Point2,
    mode: VisibilityMode,
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Point2> {
    let corners = box_corners(gt);
    let poisson = Poisson::new(cfg.points_per_edge).expect("validated mean");
    let mut points = Vec::new();

    let edge_points = |rng: &mut ChaCha8Rng, a: Point2, b: Point2, out: &mut Vec<Point2>| {
        let k = poisson.sample(rng) as usize;
        for _ in 0..k {
            let t = rng.random_range(0.0..=1.0);
            out.push(a + (b - a) * t);
        }
    };

    match mode {
        VisibilityMode::Full => {
            for i in 0..4 {
                edge_points(rng, corners[i], corners[(i + 1) % 4], &mut points);
            }
            let dir = Point2::new(gt.theta.cos(), gt.theta.sin());
            let perp = Point2::new(-dir.y, dir.x);
            let k = poisson.sample(rng) as usize;
            for _ in 0..k {
                let u = rng.random_range(-0.5..=0.5) * gt.l;
                let v = rng.random_range(-0.5..=0.5) * gt.w;
                points.push(gt.center() + dir * u + perp * v);
            }
        }
        VisibilityMode::LShape | VisibilityMode::SingleEdge => {
            // Facing score per edge: outward normal dotted with the unit
            // direction toward the sensor from the edge midpoint.
            let mut facing: Vec<(usize, f64)> = Vec::new();
            for i in 0..4 {
                let a = corners[i];
                let b = corners[(i + 1) % 4];
                let e = b - a;
                // Interior of a counter-clockwise polygon is left of each
                // edge, so the outward normal points right.
                let outward = Point2::new(e.y, -e.x);
                let mid = (a + b) * 0.5;
                let to_sensor = sensor - mid;
                let score = outward.dot(to_sensor) / (outward.norm() * to_sensor.norm());
                if score > 0.0 {
                    facing.push((i, score));
                }
            }
            facing.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let keep = match mode {
                VisibilityMode::SingleEdge => 1,
                _ => 2,
            };
            facing.truncate(keep);
            for &(i, _) in &facing {
                let a = corners[i];
                let b = corners[(i + 1) % 4];
                // Anchor the visible span at the endpoint nearest the sensor.
                let (near, far) = if (a - sensor).norm() <= (b - sensor).norm() {
                    (a, b)
                } else {
                    (b, a)
                };
                let cover = rng.random_range(cfg.cover_fraction.0..=cfg.cover_fraction.1);
                let visible_far = near + (far - near) * cover;
                edge_points(rng, near, visible_far, &mut points);
            }
        }
        VisibilityMode::Mixed => unreachable!("mixed resolves to a concrete mode per sample"),
    }
    points
}
