//! Independent oracles the integration tests check the library against:
//! Monte-Carlo area estimation for IoU, a convex-hull rotating-calipers
//! minimum-area rectangle, and central-difference gradients.

#![allow(dead_code)] // each test binary uses its own subset

use boxnet::{
    backward, box_corners, contains_point, forward, loss_and_grads, Mode, NetworkConfig,
    NetworkParams, OrientedBox, Point2, Targets,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// IoU estimated by uniform sampling over the pair's bounding rectangle.
pub fn mc_iou(a: &OrientedBox, b: &OrientedBox, n: usize, seed: u64) -> f64 {
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for c in box_corners(a).into_iter().chain(box_corners(b)) {
        xmin = xmin.min(c.x);
        xmax = xmax.max(c.x);
        ymin = ymin.min(c.y);
        ymax = ymax.max(c.y);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits_int = 0u64;
    let mut hits_uni = 0u64;
    for _ in 0..n {
        let p = Point2::new(
            rng.random_range(xmin..=xmax),
            rng.random_range(ymin..=ymax),
        );
        let in_a = contains_point(a, p, 0.0);
        let in_b = contains_point(b, p, 0.0);
        if in_a && in_b {
            hits_int += 1;
        }
        if in_a || in_b {
            hits_uni += 1;
        }
    }
    if hits_uni == 0 {
        0.0
    } else {
        hits_int as f64 / hits_uni as f64
    }
}

/// Minimum-area enclosing rectangle via the convex hull and rotating
/// calipers; returns `(area, theta)` with `theta` the direction of the
/// longer side, wrapped into `(-pi/2, pi/2]`.
pub fn min_area_rect(points: &[Point2]) -> (f64, f64) {
    let hull = convex_hull(points);
    assert!(hull.len() >= 3, "degenerate hull of {} points", hull.len());
    let mut best_area = f64::INFINITY;
    let mut best_theta = 0.0;
    for i in 0..hull.len() {
        let p = hull[i];
        let q = hull[(i + 1) % hull.len()];
        let (ex, ey) = (q.x - p.x, q.y - p.y);
        let len = ex.hypot(ey);
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = (ex / len, ey / len);
        let mut lo_d = f64::INFINITY;
        let mut hi_d = f64::NEG_INFINITY;
        let mut lo_p = f64::INFINITY;
        let mut hi_p = f64::NEG_INFINITY;
        for h in &hull {
            let d = h.x * ux + h.y * uy;
            let e = -h.x * uy + h.y * ux;
            lo_d = lo_d.min(d);
            hi_d = hi_d.max(d);
            lo_p = lo_p.min(e);
            hi_p = hi_p.max(e);
        }
        let along = hi_d - lo_d;
        let across = hi_p - lo_p;
        let area = along * across;
        if area < best_area {
            best_area = area;
            let dir = if along >= across {
                uy.atan2(ux)
            } else {
                ux.atan2(-uy)
            };
            best_theta = wrap_half_pi(dir);
        }
    }
    (best_area, best_theta)
}

fn wrap_half_pi(theta: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Andrew's monotone chain; returns the hull counter-clockwise without the
/// closing point.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point2, a: Point2, b: Point2| -> f64 {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Training-mode loss of the whole pipeline, the scalar the finite
/// differences probe.
pub fn pipeline_loss(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    clouds: &[&[Point2]],
    targets: &Targets,
) -> f64 {
    let (pred, _) = forward(params, cfg, clouds, Mode::Train).expect("forward");
    loss_and_grads(&pred, targets, cfg).expect("loss").0
}

/// Worst relative disagreement between analytic and central-difference
/// gradients over the given trainable indices. Each index tries a ladder
/// of step sizes and keeps its best agreement, which rides out ReLU kinks
/// and pooling switches near a step.
pub fn gradcheck_max_rel(
    params: &mut NetworkParams,
    cfg: &NetworkConfig,
    clouds: &[&[Point2]],
    targets: &Targets,
    indices: &[usize],
) -> f64 {
    let (pred, cache) = forward(params, cfg, clouds, Mode::Train).expect("forward");
    let (_, d_out) = loss_and_grads(&pred, targets, cfg).expect("loss");
    let grads = backward(params, cfg, cache.expect("train cache"), &d_out).expect("backward");
    let flat = grads.flat();
    let mut worst = 0.0_f64;
    for &i in indices {
        let analytic = flat[i];
        let orig = params.get_trainable(i);
        let mut best_rel = f64::INFINITY;
        for h in [1e-4, 1e-5, 1e-6, 1e-7] {
            params.set_trainable(i, orig + h);
            let up = pipeline_loss(params, cfg, clouds, targets);
            params.set_trainable(i, orig - h);
            let down = pipeline_loss(params, cfg, clouds, targets);
            params.set_trainable(i, orig);
            let fd = (up - down) / (2.0 * h);
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-3);
            best_rel = best_rel.min(rel);
            if best_rel < 1e-5 {
                break;
            }
        }
        worst = worst.max(best_rel);
    }
    worst
}

/// Clouds and matching targets for gradient checks: a few small synthetic
/// clouds resampled to `points_each`.
pub fn gradcheck_batch(
    batch: usize,
    points_each: usize,
    cfg: &NetworkConfig,
    seed: u64,
) -> (Vec<Vec<Point2>>, Targets) {
    let samples =
        boxnet::generate_synthetic(&boxnet::SynthConfig::default(), batch, seed).expect("synth");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let resampled: Vec<boxnet::ResampledSample> = samples
        .iter()
        .map(|s| boxnet::resample(s, points_each, rng.random()).expect("resample"))
        .collect();
    let refs: Vec<&boxnet::ResampledSample> = resampled.iter().collect();
    let targets = boxnet::build_targets(&refs, cfg).expect("targets");
    let clouds: Vec<Vec<Point2>> = resampled.into_iter().map(|r| r.points).collect();
    (clouds, targets)
}

/// A random well-formed box for geometry tests.
pub fn random_box(rng: &mut ChaCha8Rng, extent: f64) -> OrientedBox {
    use std::f64::consts::FRAC_PI_2;
    OrientedBox::new(
        rng.random_range(-extent..extent),
        rng.random_range(-extent..extent),
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..5.0),
        rng.random_range(-FRAC_PI_2 + 1e-9..=FRAC_PI_2),
    )
    .expect("valid box")
}
