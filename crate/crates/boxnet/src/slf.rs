//! Search-based L-shape fitting: an exhaustive orientation scan keeping the
//! tightest box that embraces every point.
//!
//! For each candidate angle the points are projected onto the rotated axes
//! and the `[min, max]` projection ranges define an embracing box; one of
//! three criteria scores the candidate. Because the box is axial, the scan
//! only covers `[0, pi/2)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{OrientedBox, Point2};

/// Extent floor so collinear inputs still produce a valid (sliver) box.
const MIN_EXTENT: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SlfError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are coincident")]
    CoincidentPoints,
    #[error("point {0} is not finite")]
    NonFinitePoint(usize),
    #[error("{0}")]
    InvalidConfig(String),
}

/// Scoring rule that ranks candidate orientations (all maximized).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlfCriterion {
    /// Negated embracing-box area: prefer the smallest box.
    Area,
    /// Sum of inverse point-to-nearest-edge distances (floored at `d0`):
    /// prefer points hugging the box boundary.
    Closeness,
    /// Negated variance of point-to-edge distances, split into the two
    /// edge families: prefer edges that look like sampled line segments.
    Variance,
}

impl SlfCriterion {
    pub const ALL: [SlfCriterion; 3] = [
        SlfCriterion::Area,
        SlfCriterion::Closeness,
        SlfCriterion::Variance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SlfCriterion::Area => "area",
            SlfCriterion::Closeness => "closeness",
            SlfCriterion::Variance => "variance",
        }
    }
}

impl fmt::Display for SlfCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlfCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "area" => Ok(SlfCriterion::Area),
            "closeness" => Ok(SlfCriterion::Closeness),
            "variance" => Ok(SlfCriterion::Variance),
            other => Err(format!("unknown criterion {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SlfConfig {
    pub criterion: SlfCriterion,
    /// Orientation search resolution, radians. Must be in (0, pi/4].
    pub step: f64,
    /// Closeness distance floor, meters. Must be positive.
    pub d0: f64,
}

impl SlfConfig {
    pub fn with_criterion(criterion: SlfCriterion) -> Self {
        SlfConfig {
            criterion,
            ..SlfConfig::default()
        }
    }
}

impl Default for SlfConfig {
    fn default() -> Self {
        SlfConfig {
            criterion: SlfCriterion::Closeness,
            step: 0.5f64.to_radians(),
            d0: 0.01,
        }
    }
}

/// Fits the best embracing box over the orientation grid
/// `{0, step, 2*step, ...} < pi/2`, ties resolved toward the smallest angle.
/// The result satisfies `l >= w` with `theta` along the `l` axis, and every
/// input point lies inside the box inflated by 1e-9.
pub fn slf_fit(points: &[Point2], cfg: &SlfConfig) -> Result<OrientedBox, SlfError> {
    if !(cfg.step > 0.0 && cfg.step <= std::f64::consts::FRAC_PI_4) {
        return Err(SlfError::InvalidConfig(format!(
            "step must be in (0, pi/4], got {}",
            cfg.step
        )));
    }
    if !(cfg.d0 > 0.0 && cfg.d0.is_finite()) {
        return Err(SlfError::InvalidConfig(format!(
            "d0 must be positive, got {}",
            cfg.d0
        )));
    }
    if points.len() < 3 {
        return Err(SlfError::TooFewPoints(points.len()));
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(SlfError::NonFinitePoint(i));
        }
    }
    if points.iter().all(|p| *p == points[0]) {
        return Err(SlfError::CoincidentPoints);
    }

    let mut proj1 = vec![0.0f64; points.len()];
    let mut proj2 = vec![0.0f64; points.len()];
    let mut best: Option<(f64, Candidate)> = None;
    let mut k = 0u32;
    loop {
        let theta = f64::from(k) * cfg.step;
        if theta >= FRAC_PI_2 {
            break;
        }
        let (s, c) = theta.sin_cos();
        let (mut min1, mut max1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min2, mut max2) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, p) in points.iter().enumerate() {
            let a = c * p.x + s * p.y;
            let b = -s * p.x + c * p.y;
            proj1[i] = a;
            proj2[i] = b;
            min1 = min1.min(a);
            max1 = max1.max(a);
            min2 = min2.min(b);
            max2 = max2.max(b);
        }
        let cand = Candidate {
            theta,
            min1,
            max1,
            min2,
            max2,
        };
        let score = match cfg.criterion {
            SlfCriterion::Area => -(max1 - min1) * (max2 - min2),
            SlfCriterion::Closeness => closeness_score(&proj1, &proj2, &cand, cfg.d0),
            SlfCriterion::Variance => variance_score(&proj1, &proj2, &cand),
        };
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, cand));
        }
        k += 1;
    }

    let (_, cand) = best.expect("grid holds at least theta = 0");
    let (s, c) = cand.theta.sin_cos();
    let mid1 = (cand.min1 + cand.max1) / 2.0;
    let mid2 = (cand.min2 + cand.max2) / 2.0;
    let center = Point2::new(c * mid1 - s * mid2, s * mid1 + c * mid2);
    let ext1 = (cand.max1 - cand.min1).max(MIN_EXTENT);
    let ext2 = (cand.max2 - cand.min2).max(MIN_EXTENT);
    let (w, l, theta) = if ext1 >= ext2 {
        (ext2, ext1, cand.theta)
    } else {
        (ext1, ext2, cand.theta + FRAC_PI_2)
    };
    Ok(OrientedBox::new(center.x, center.y, w, l, theta)
        .expect("finite points give a valid embracing box"))
}

struct Candidate {
    theta: f64,
    min1: f64,
    max1: f64,
    min2: f64,
    max2: f64,
}

/// Distance from each projection pair to its nearest box edge.
fn edge_distances(proj1: f64, proj2: f64, c: &Candidate) -> (f64, f64) {
    let d1 = (proj1 - c.min1).min(c.max1 - proj1);
    let d2 = (proj2 - c.min2).min(c.max2 - proj2);
    (d1, d2)
}

fn closeness_score(proj1: &[f64], proj2: &[f64], c: &Candidate, d0: f64) -> f64 {
    let mut score = 0.0;
    for i in 0..proj1.len() {
        let (d1, d2) = edge_distances(proj1[i], proj2[i], c);
        score += 1.0 / d1.min(d2).max(d0);
    }
    score
}

fn variance_score(proj1: &[f64], proj2: &[f64], c: &Candidate) -> f64 {
    // Assign each point to the edge family it is nearer to, then penalize
    // the spread of distances within each family.
    let mut fam1 = Vec::new();
    let mut fam2 = Vec::new();
    for i in 0..proj1.len() {
        let (d1, d2) = edge_distances(proj1[i], proj2[i], c);
        if d1 < d2 {
            fam1.push(d1);
        } else {
            fam2.push(d2);
        }
    }
    -(population_variance(&fam1) + population_variance(&fam2))
}

/// Population variance; fewer than two members contribute zero.
fn population_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / v.len() as f64
}
