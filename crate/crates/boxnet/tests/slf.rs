//! Search-based fits checked against an exact rotating-calipers oracle.

mod common;

use std::f64::consts::FRAC_PI_2;

use boxnet::{box_corners, contains_point, slf_fit, Point2, SlfConfig, SlfCriterion};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Angular distance modulo pi/2, for comparing box-edge directions.
fn quarter_turn_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d)
}

/// Points sampled inside a random oriented rectangle with aspect <= 3.
fn filled_rect_cloud(rng: &mut ChaCha8Rng) -> Vec<Point2> {
    let w = rng.random_range(0.6..2.0);
    let aspect = rng.random_range(1.0..3.0);
    let l = w * aspect;
    let theta = rng.random_range(-FRAC_PI_2 + 1e-6..FRAC_PI_2);
    let (cx, cy) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    let (s, c) = theta.sin_cos();
    let n = rng.random_range(30..120);
    (0..n)
        .map(|_| {
            let u = rng.random_range(-0.5..0.5) * l;
            let v = rng.random_range(-0.5..0.5) * w;
            Point2::new(cx + u * c - v * s, cy + u * s + v * c)
        })
        .collect()
}

#[test]
fn area_criterion_is_close_to_the_exact_minimum_rectangle() {
    let cfg = SlfConfig::with_criterion(SlfCriterion::Area);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for case in 0..50 {
        let pts = filled_rect_cloud(&mut rng);
        let fit = slf_fit(&pts, &cfg).unwrap();
        let (best_area, _) = common::min_area_rect(&pts);
        assert!(best_area > 0.0, "case {case}: degenerate oracle area");
        let bound = (1.0 + 4.0 * cfg.step) * best_area;
        assert!(
            fit.area() <= bound,
            "case {case}: fit area {} exceeds {} (optimal {})",
            fit.area(),
            bound,
            best_area
        );
        // The grid-optimal fit can never beat the true optimum.
        assert!(fit.area() >= best_area - 1e-9 * best_area);
    }
}

#[test]
fn four_exact_corners_pin_the_area_fit_to_the_generating_box() {
    let cfg = SlfConfig::with_criterion(SlfCriterion::Area);
    // The 30-degree truth sits exactly on the search grid, so the fit is
    // essentially exact.
    let b = boxnet::OrientedBox::new(0.0, 0.0, 2.0, 4.0, 30f64.to_radians()).unwrap();
    let fit = slf_fit(&box_corners(&b), &cfg).unwrap();
    assert!(quarter_turn_distance(fit.theta, b.theta) <= cfg.step + 1e-9);
    assert!((fit.area() - 8.0).abs() <= 0.005 * 8.0, "area {}", fit.area());

    // Off-grid truths still land within one grid step.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..30 {
        let b = common::random_box(&mut rng, 4.0);
        let fit = slf_fit(&box_corners(&b), &cfg).unwrap();
        let miss = quarter_turn_distance(fit.theta, b.theta);
        assert!(
            miss <= cfg.step + 1e-9,
            "case {case}: edge direction off by {:.4} deg",
            miss.to_degrees()
        );
        assert!(fit.area() <= (1.0 + 4.0 * cfg.step) * b.area());
    }
}

#[test]
fn corner_criteria_lock_onto_an_exact_corner_within_one_grid_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for case in 0..30 {
        // Two perpendicular edges meeting at a corner, sampled densely and
        // exactly (no noise). The minimum-area box of such an L can sit
        // diagonally, but the corner-seeking criteria must align with the
        // legs.
        let theta = rng.random_range(-FRAC_PI_2 + 1e-6..FRAC_PI_2);
        let (s, c) = theta.sin_cos();
        let len_a = rng.random_range(1.5..4.0);
        let len_b = rng.random_range(1.0..3.0);
        let (cx, cy) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mut pts = Vec::new();
        for i in 0..=40 {
            let t = len_a * i as f64 / 40.0;
            pts.push(Point2::new(cx + t * c, cy + t * s));
        }
        for i in 1..=30 {
            let t = len_b * i as f64 / 30.0;
            pts.push(Point2::new(cx - t * s, cy + t * c));
        }
        for criterion in [SlfCriterion::Closeness, SlfCriterion::Variance] {
            let cfg = SlfConfig::with_criterion(criterion);
            let fit = slf_fit(&pts, &cfg).unwrap();
            let miss = quarter_turn_distance(fit.theta, theta);
            assert!(
                miss <= cfg.step + 1e-9,
                "case {case} {criterion:?}: edge direction off by {:.4} deg",
                miss.to_degrees()
            );
        }
    }
}

#[test]
fn fits_embrace_their_input_and_keep_l_at_least_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let pts = filled_rect_cloud(&mut rng);
        for criterion in [SlfCriterion::Area, SlfCriterion::Closeness, SlfCriterion::Variance] {
            let fit = slf_fit(&pts, &SlfConfig::with_criterion(criterion)).unwrap();
            assert!(fit.l >= fit.w);
            for &p in &pts {
                assert!(contains_point(&fit, p, 1e-9));
            }
        }
    }
}

#[test]
fn collinear_points_still_produce_a_valid_box() {
    let pts: Vec<Point2> = (0..10).map(|i| Point2::new(i as f64 * 0.3, 1.0)).collect();
    let fit = slf_fit(&pts, &SlfConfig::default()).unwrap();
    assert!(fit.w > 0.0 && fit.l > 0.0);
    assert!(quarter_turn_distance(fit.theta, 0.0) < SlfConfig::default().step + 1e-9);
    for &p in &pts {
        assert!(contains_point(&fit, p, 1e-6));
    }
}

#[test]
fn corners_of_a_tight_fit_straddle_the_hull() {
    // For an axis-aligned unit square of points, the area fit at step
    // resolution must essentially reproduce the square.
    let mut pts = Vec::new();
    for i in 0..=10 {
        for j in 0..=10 {
            pts.push(Point2::new(i as f64 / 10.0, j as f64 / 10.0));
        }
    }
    let fit = slf_fit(&pts, &SlfConfig::with_criterion(SlfCriterion::Area)).unwrap();
    assert!((fit.area() - 1.0).abs() < 0.02, "area {}", fit.area());
    let hull = common::convex_hull(&pts);
    for corner in box_corners(&fit) {
        // Every fitted corner stays near the hull (tight embrace).
        let nearest = hull
            .iter()
            .map(|h| (h.x - corner.x).hypot(h.y - corner.y))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 0.05, "corner {corner:?} drifts {nearest}");
    }
}
