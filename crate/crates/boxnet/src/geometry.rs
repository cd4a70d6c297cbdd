//! Planar points, oriented boxes, and the metrics used to score box estimates.
//!
//! Orientations are always axial: a box rotated by pi is the same box, so
//! every angle is kept in `(-pi/2, pi/2]` and angle differences are measured
//! modulo pi.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use thiserror::Error;

/// Intersection areas below this are treated as no overlap.
pub const MIN_INTERSECTION_AREA: f64 = 1e-12;
/// Boxes with an extent below this are degenerate for IoU purposes.
pub const MIN_BOX_EXTENT: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("box center must be finite, got ({cx}, {cy})")]
    NonFiniteCenter { cx: f64, cy: f64 },
    #[error("box dimensions must be finite and positive, got w={w} l={l}")]
    InvalidDimensions { w: f64, l: f64 },
}

/// A point in the ground plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, positive when `other` is
    /// counter-clockwise from `self`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// An oriented rectangle in the ground plane.
///
/// `theta` is the direction of the `l` axis and is kept in `(-pi/2, pi/2]`;
/// `w` and `l` are strictly positive. `l` is not required to exceed `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub l: f64,
    pub theta: f64,
}

impl OrientedBox {
    /// Validates the fields and normalizes `theta` into `(-pi/2, pi/2]`.
    pub fn new(cx: f64, cy: f64, w: f64, l: f64, theta: f64) -> Result<Self, GeometryError> {
        if !cx.is_finite() || !cy.is_finite() {
            return Err(GeometryError::NonFiniteCenter { cx, cy });
        }
        if !(w.is_finite() && l.is_finite() && w > 0.0 && l > 0.0) {
            return Err(GeometryError::InvalidDimensions { w, l });
        }
        Ok(OrientedBox {
            cx,
            cy,
            w,
            l,
            theta: normalize_angle(theta)?,
        })
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.l
    }
}

/// Wraps an angle into `(-pi/2, pi/2]` (orientations are modulo pi).
pub fn normalize_angle(theta: f64) -> Result<f64, GeometryError> {
    if !theta.is_finite() {
        return Err(GeometryError::NonFiniteAngle(theta));
    }
    let mut r = theta.rem_euclid(PI);
    if r > FRAC_PI_2 {
        r -= PI;
    }
    Ok(r)
}

/// The four corners in counter-clockwise order. The edge pair separated by
/// `l` lies along `(cos theta, sin theta)`.
pub fn box_corners(b: &OrientedBox) -> [Point2; 4] {
    let dir = Point2::new(b.theta.cos(), b.theta.sin());
    let perp = Point2::new(-dir.y, dir.x);
    let c = b.center();
    let hd = dir * (b.l / 2.0);
    let hp = perp * (b.w / 2.0);
    [c + hd - hp, c + hd + hp, c - hd + hp, c - hd - hp]
}

/// Whether `p` lies inside `b` inflated by `eps` on every side.
pub fn contains_point(b: &OrientedBox, p: Point2, eps: f64) -> bool {
    let dir = Point2::new(b.theta.cos(), b.theta.sin());
    let perp = Point2::new(-dir.y, dir.x);
    let d = p - b.center();
    d.dot(dir).abs() <= b.l / 2.0 + eps && d.dot(perp).abs() <= b.w / 2.0 + eps
}

/// Euclidean distance between the two box centers.
pub fn center_error(pred: &OrientedBox, gt: &OrientedBox) -> f64 {
    (gt.cx - pred.cx).hypot(gt.cy - pred.cy)
}

/// Signed orientation difference `gt - pred`, wrapped into `(-pi/2, pi/2]`.
///
/// Antisymmetric except at exactly pi/2, where both directions report pi/2.
pub fn orientation_error(pred: &OrientedBox, gt: &OrientedBox) -> f64 {
    let d = gt.theta - pred.theta;
    if d > FRAC_PI_2 {
        d - PI
    } else if d <= -FRAC_PI_2 {
        d + PI
    } else {
        d
    }
}

/// Intersection-over-union of two oriented boxes.
///
/// Computed by clipping one rectangle against the other's half-planes and
/// taking the shoelace area of the resulting convex polygon. Boxes with an
/// extent under [`MIN_BOX_EXTENT`] score 0, as do intersections below
/// [`MIN_INTERSECTION_AREA`].
pub fn iou(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if a.w < MIN_BOX_EXTENT || a.l < MIN_BOX_EXTENT || b.w < MIN_BOX_EXTENT || b.l < MIN_BOX_EXTENT
    {
        return 0.0;
    }
    let inter = intersection_area(a, b);
    if inter < MIN_INTERSECTION_AREA {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

fn intersection_area(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let mut poly: Vec<Point2> = box_corners(a).to_vec();
    let clip = box_corners(b);
    for i in 0..4 {
        if poly.is_empty() {
            return 0.0;
        }
        let p = clip[i];
        let q = clip[(i + 1) % 4];
        let edge = q - p;
        let input = std::mem::take(&mut poly);
        for (j, &cur) in input.iter().enumerate() {
            let prev = input[(j + input.len() - 1) % input.len()];
            let side_cur = edge.cross(cur - p);
            let side_prev = edge.cross(prev - p);
            if side_cur >= 0.0 {
                if side_prev < 0.0 {
                    poly.push(line_intersect(prev, cur, p, q));
                }
                poly.push(cur);
            } else if side_prev >= 0.0 {
                poly.push(line_intersect(prev, cur, p, q));
            }
        }
    }
    polygon_area(&poly)
}

/// Intersection of segment `a`-`b` with the infinite line through `p`-`q`.
/// Callers guarantee the segment straddles the line.
fn line_intersect(a: Point2, b: Point2, p: Point2, q: Point2) -> Point2 {
    let edge = q - p;
    let da = edge.cross(a - p);
    let db = edge.cross(b - p);
    let t = da / (da - db);
    a + (b - a) * t
}

fn polygon_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        acc += p.cross(q);
    }
    acc.abs() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxx(cx: f64, cy: f64, w: f64, l: f64, theta: f64) -> OrientedBox {
        OrientedBox::new(cx, cy, w, l, theta).unwrap()
    }

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normalize_angle_examples() {
        assert_eq!(normalize_angle(PI).unwrap(), 0.0);
        assert_eq!(normalize_angle(-FRAC_PI_2).unwrap(), FRAC_PI_2);
        assert!(approx_eq(normalize_angle(2.0).unwrap(), 2.0 - PI, 1e-15));
        assert_eq!(normalize_angle(0.3).unwrap(), 0.3);
        assert_eq!(normalize_angle(FRAC_PI_2).unwrap(), FRAC_PI_2);
        assert!(normalize_angle(f64::NAN).is_err());
        assert!(normalize_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn normalize_angle_idempotent_on_large_inputs() {
        for k in -6..=6 {
            let t = 0.4 + k as f64 * PI;
            let n = normalize_angle(t).unwrap();
            assert!(n > -FRAC_PI_2 && n <= FRAC_PI_2);
            assert_eq!(normalize_angle(n).unwrap(), n);
        }
    }

    #[test]
    fn corners_of_axis_aligned_box() {
        let b = boxx(0.0, 0.0, 2.0, 4.0, 0.0);
        let c = box_corners(&b);
        assert_eq!(c[0], Point2::new(2.0, -1.0));
        assert_eq!(c[1], Point2::new(2.0, 1.0));
        assert_eq!(c[2], Point2::new(-2.0, 1.0));
        assert_eq!(c[3], Point2::new(-2.0, -1.0));
    }

    #[test]
    fn corners_centroid_matches_center() {
        let b = boxx(3.5, -1.25, 1.7, 4.2, 0.77);
        let c = box_corners(&b);
        let mx = (c[0].x + c[1].x + c[2].x + c[3].x) / 4.0;
        let my = (c[0].y + c[1].y + c[2].y + c[3].y) / 4.0;
        assert!(approx_eq(mx, b.cx, 1e-12));
        assert!(approx_eq(my, b.cy, 1e-12));
    }

    #[test]
    fn center_error_is_euclidean() {
        let a = boxx(0.0, 0.0, 1.0, 2.0, 0.0);
        let b = boxx(3.0, 4.0, 1.0, 2.0, 0.0);
        assert_eq!(center_error(&a, &b), 5.0);
    }

    #[test]
    fn orientation_error_wraps_into_half_circle() {
        let deg = |d: f64| d * PI / 180.0;
        let at = |t: f64| boxx(0.0, 0.0, 1.0, 2.0, t);
        // 80 deg vs -80 deg differ by 20 deg through the wrap, not 160.
        let e = orientation_error(&at(deg(80.0)), &at(deg(-80.0)));
        assert!(approx_eq(e, deg(20.0), 1e-12));
        let e = orientation_error(&at(deg(-80.0)), &at(deg(80.0)));
        assert!(approx_eq(e, deg(-20.0), 1e-12));
        assert_eq!(orientation_error(&at(0.1), &at(0.1)), 0.0);
        // Exactly pi/2 apart: both directions report +pi/2.
        let e1 = orientation_error(&at(deg(-45.0)), &at(deg(45.0)));
        let e2 = orientation_error(&at(deg(45.0)), &at(deg(-45.0)));
        assert!(approx_eq(e1, FRAC_PI_2, 1e-12));
        assert!(approx_eq(e2, FRAC_PI_2, 1e-12));
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = boxx(1.0, 2.0, 1.5, 3.5, 0.6);
        assert!(approx_eq(iou(&a, &a), 1.0, 1e-12));
        let far = boxx(100.0, 2.0, 1.5, 3.5, 0.6);
        assert_eq!(iou(&a, &far), 0.0);
    }

    #[test]
    fn iou_axis_aligned_overlap() {
        // x-extents [-2,2] and [-1,3] overlap 3; y-extents both [-1,1].
        let a = boxx(0.0, 0.0, 2.0, 4.0, 0.0);
        let b = boxx(1.0, 0.0, 2.0, 4.0, 0.0);
        assert!(approx_eq(iou(&a, &b), 6.0 / 10.0, 1e-12));
    }

    #[test]
    fn iou_rotated_square() {
        let a = boxx(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = boxx(0.0, 0.0, 1.0, 1.0, PI / 4.0);
        // Intersection is a regular octagon of area 2(sqrt(2)-1).
        let inter = 2.0 * (2.0_f64.sqrt() - 1.0);
        let expect = inter / (2.0 - inter);
        assert!(approx_eq(iou(&a, &b), expect, 1e-12));
        assert!(approx_eq(expect, std::f64::consts::FRAC_1_SQRT_2, 1e-12));
    }

    #[test]
    fn iou_edge_touching_counts_as_zero() {
        let a = boxx(0.0, 0.0, 2.0, 2.0, 0.0);
        let b = boxx(2.0, 0.0, 2.0, 2.0, 0.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_symmetry() {
        let a = boxx(0.3, -0.2, 1.2, 3.1, 0.4);
        let b = boxx(0.8, 0.5, 1.9, 2.2, -1.1);
        assert!(approx_eq(iou(&a, &b), iou(&b, &a), 1e-12));
    }

    #[test]
    fn box_validation() {
        assert!(OrientedBox::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(OrientedBox::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(OrientedBox::new(f64::NAN, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(OrientedBox::new(0.0, 0.0, 1.0, 1.0, f64::NAN).is_err());
        let b = OrientedBox::new(0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
        assert!(approx_eq(b.theta, 2.0 - PI, 1e-15));
    }

    #[test]
    fn contains_point_respects_orientation() {
        let b = boxx(0.0, 0.0, 2.0, 4.0, FRAC_PI_2);
        // l runs along +y now.
        assert!(contains_point(&b, Point2::new(0.0, 1.9), 0.0));
        assert!(!contains_point(&b, Point2::new(1.9, 0.0), 0.0));
    }
}
