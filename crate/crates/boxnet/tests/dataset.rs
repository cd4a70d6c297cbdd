//! Round-trip and generation properties exercised through the public API.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use boxnet::{
    contains_point, generate_synthetic, read_pbev, resample, split_samples, write_pbev,
    ClassChoice, ClassLabel, OrientedBox, Point2, Sample, SynthConfig, VisibilityMode,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

fn wrapped_angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn assert_samples_close(got: &[Sample], want: &[Sample], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.id, w.id);
        assert_eq!(g.class_label, w.class_label);
        assert!((g.gt.cx - w.gt.cx).abs() <= tol, "{}: cx", g.id);
        assert!((g.gt.cy - w.gt.cy).abs() <= tol, "{}: cy", g.id);
        assert!((g.gt.w - w.gt.w).abs() <= tol, "{}: w", g.id);
        assert!((g.gt.l - w.gt.l).abs() <= tol, "{}: l", g.id);
        assert!(
            wrapped_angle_gap(g.gt.theta, w.gt.theta) <= tol,
            "{}: theta {} vs {}",
            g.id,
            g.gt.theta,
            w.gt.theta
        );
        assert_eq!(g.points.len(), w.points.len(), "{}: point count", g.id);
        for (p, q) in g.points.iter().zip(&w.points) {
            assert!((p.x - q.x).abs() <= tol && (p.y - q.y).abs() <= tol);
        }
    }
}

proptest! {
    #[test]
    fn pbev_files_round_trip(raw in prop::collection::vec(
        (
            -80.0..80.0f64,            // cx
            -80.0..80.0f64,            // cy
            0.05..5.0f64,              // w
            0.05..10.0f64,             // l
            -10.0..10.0f64,            // theta, normalized on construction
            0..3usize,                 // class index
            prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..40),
        ),
        1..12,
    )) {
        let samples: Vec<Sample> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (cx, cy, w, l, theta, class, pts))| Sample {
                id: format!("case-{i:04}"),
                class_label: ClassLabel::ALL[class],
                points: pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect(),
                gt: OrientedBox::new(cx, cy, w, l, theta).unwrap(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("io.pbev");
        write_pbev(&path, &samples).unwrap();
        let back = read_pbev(&path).unwrap();
        assert_samples_close(&back, &samples, 1e-7);
        // Writing what was read reproduces the bytes: the format is a
        // fixed-precision fixpoint.
        let again = dir.path().join("io2.pbev");
        write_pbev(&again, &back).unwrap();
        prop_assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }
}

#[test]
fn pbev_round_trips_angles_that_round_across_the_boundary() {
    // Values whose 9-decimal rendering falls outside (-pi/2, pi/2] must
    // still produce readable files.
    let thetas = [
        FRAC_PI_2,
        FRAC_PI_2 - 1e-12,
        -FRAC_PI_2 + 1e-12,
        -FRAC_PI_2 + 4.9e-10,
        FRAC_PI_2 - 4.9e-10,
        1.570796327,
        -1.570796326,
    ];
    let samples: Vec<Sample> = thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| Sample {
            id: format!("edge-{i}"),
            class_label: ClassLabel::Car,
            points: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)],
            gt: OrientedBox::new(0.0, 0.0, 1.0, 2.0, t).unwrap(),
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("edge.pbev");
    write_pbev(&path, &samples).unwrap();
    let back = read_pbev(&path).unwrap();
    for (g, w) in back.iter().zip(&samples) {
        assert!(
            wrapped_angle_gap(g.gt.theta, w.gt.theta) <= 1e-7,
            "{}: {} vs {}",
            g.id,
            g.gt.theta,
            w.gt.theta
        );
    }
}

#[test]
fn pbev_rejects_duplicate_ids_and_garbage() {
    let s = Sample {
        id: "dup".into(),
        class_label: ClassLabel::Car,
        points: vec![Point2::new(0.0, 0.0)],
        gt: OrientedBox::new(0.0, 0.0, 1.0, 2.0, 0.0).unwrap(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pbev");
    assert!(write_pbev(&path, &[s.clone(), s]).is_err());
    std::fs::write(&path, "pbev 1\nsample x car\nbox nope\n").unwrap();
    assert!(read_pbev(&path).is_err());
    std::fs::write(&path, "not-a-header\n").unwrap();
    assert!(read_pbev(&path).is_err());
}

#[test]
fn noiseless_synthetic_points_lie_inside_their_box() {
    let cfg = SynthConfig {
        noise_m: 0.0,
        mode: VisibilityMode::Mixed,
        ..SynthConfig::default()
    };
    let samples = generate_synthetic(&cfg, 40, 11).unwrap();
    assert_eq!(samples.len(), 40);
    for s in &samples {
        assert!(s.points.len() > cfg.min_points);
        for &p in &s.points {
            assert!(contains_point(&s.gt, p, 1e-9), "{}: point escapes", s.id);
        }
    }
}

#[test]
fn synthetic_generation_is_deterministic_and_seed_sensitive() {
    let cfg = SynthConfig::default();
    let a = generate_synthetic(&cfg, 25, 5).unwrap();
    let b = generate_synthetic(&cfg, 25, 5).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.id, y.id);
        assert_eq!(x.points.len(), y.points.len());
        assert_eq!(x.gt.cx.to_bits(), y.gt.cx.to_bits());
        assert_eq!(x.gt.theta.to_bits(), y.gt.theta.to_bits());
        for (p, q) in x.points.iter().zip(&y.points) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.y.to_bits(), q.y.to_bits());
        }
    }
    let c = generate_synthetic(&cfg, 25, 6).unwrap();
    assert!(a.iter().zip(&c).any(|(x, y)| x.gt.cx != y.gt.cx));
}

#[test]
fn mixed_visibility_produces_both_kinds_of_samples() {
    let cfg = SynthConfig {
        mode: VisibilityMode::Mixed,
        class: ClassChoice::Mixed,
        ..SynthConfig::default()
    };
    let samples = generate_synthetic(&cfg, 120, 3).unwrap();
    let full = samples.iter().filter(|s| s.id.ends_with("-full")).count();
    let lshape = samples.iter().filter(|s| s.id.ends_with("-lshape")).count();
    assert_eq!(full + lshape, 120);
    assert!(full > 20 && lshape > 20, "full {full}, lshape {lshape}");
    for class in ClassLabel::ALL {
        assert!(samples.iter().any(|s| s.class_label == class));
    }
}

#[test]
fn split_is_a_deterministic_partition() {
    let samples = generate_synthetic(&SynthConfig::default(), 50, 9).unwrap();
    let split = split_samples(samples.clone(), 0.8, 21).unwrap();
    assert_eq!(split.train.len(), 40);
    assert_eq!(split.test.len(), 10);
    let mut ids: Vec<&str> = split
        .train
        .iter()
        .chain(&split.test)
        .map(|s| s.id.as_str())
        .collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 50);
    let again = split_samples(samples, 0.8, 21).unwrap();
    let key = |v: &[Sample]| v.iter().map(|s| s.id.clone()).collect::<Vec<_>>();
    assert_eq!(key(&split.train), key(&again.train));
    assert_eq!(key(&split.test), key(&again.test));
}

#[test]
fn resampling_draws_from_the_source_multiset() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let points: Vec<Point2> = (0..64)
        .map(|_| Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
        .collect();
    let s = Sample {
        id: "r".into(),
        class_label: ClassLabel::Car,
        points,
        gt: OrientedBox::new(0.0, 0.0, 2.0, 4.0, 0.2).unwrap(),
    };
    let is_source_point =
        |p: Point2, s: &Sample| s.points.iter().any(|q| q.x == p.x && q.y == p.y);

    // Fewer than available: distinct draws, all from the source.
    let down = resample(&s, 16, 1).unwrap();
    assert_eq!(down.points.len(), 16);
    for &p in &down.points {
        assert!(is_source_point(p, &s));
    }
    let mut keys: Vec<(u64, u64)> = down
        .points
        .iter()
        .map(|p| (p.x.to_bits(), p.y.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    assert_eq!(keys.len(), 16, "downsampling must not duplicate");

    // More than available: everything appears, padding comes from the set.
    let up = resample(&s, 100, 2).unwrap();
    assert_eq!(up.points.len(), 100);
    for &p in &up.points {
        assert!(is_source_point(p, &s));
    }
    for &p in &s.points {
        assert!(is_source_point(p, &Sample { points: up.points.clone(), ..s.clone() }));
    }

    // Determinism in both directions.
    let down2 = resample(&s, 16, 1).unwrap();
    assert_eq!(
        down.points.iter().map(|p| p.x.to_bits()).collect::<Vec<_>>(),
        down2.points.iter().map(|p| p.x.to_bits()).collect::<Vec<_>>()
    );
}
