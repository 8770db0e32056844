//! Nearest point on an ellipse boundary.
//!
//! The foot point solves the stationarity condition of the Lagrangian of
//! `min |p - q|^2 s.t. p1^2/a^2 + p2^2/b^2 = 1`. Eliminating `p` leaves a
//! scalar equation in the multiplier `t`,
//!
//! ```text
//! F(t) = (a q1 / (t + a^2))^2 + (b q2 / (t + b^2))^2 - 1 = 0,
//! ```
//!
//! which is decreasing and convex on `(-b^2, inf)` for a query in the open
//! first quadrant. Newton's method started left of the root converges
//! monotonically; a bisection bracket guards the iteration.

use crate::Point;

const MAX_NEWTON: usize = 64;
const RESIDUAL_TOL: f64 = 1e-12;
const MAX_BISECT: usize = 200;

/// Result of a point-to-ellipse query in the ellipse's local frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Foot {
    pub point: Point,
    /// The query lies on the medial segment, where two feet are equally near.
    pub ambiguous: bool,
    /// Distance from the foot along the inward normal to the medial axis.
    pub local_reach: f64,
}

/// Nearest boundary point of the axis-aligned ellipse with semi-axes `a`, `b`
/// centered at the origin.
pub(crate) fn nearest_on_ellipse(a: f64, b: f64, q: Point) -> Foot {
    if a < b {
        let f = nearest_on_ellipse(b, a, Point::new(q.y, q.x));
        return Foot {
            point: Point::new(f.point.y, f.point.x),
            ..f
        };
    }
    let (sx, sy) = (sign(q.x), sign(q.y));
    let (x, y) = (q.x.abs(), q.y.abs());

    let (px, py, ambiguous) = if y > 0.0 {
        if x > 0.0 {
            let t = solve_multiplier(a, b, x, y);
            (a * a * x / (t + a * a), b * b * y / (t + b * b), false)
        } else {
            (0.0, b, false)
        }
    } else {
        let edge = (a * a - b * b) / a;
        if x < edge {
            let px = a * a * x / (a * a - b * b);
            let py = b * (1.0 - (px / a).powi(2)).max(0.0).sqrt();
            (px, py, py > 0.0)
        } else {
            (a, 0.0, false)
        }
    };

    let local_reach = b * b * ((px / (a * a)).powi(2) + (py / (b * b)).powi(2)).sqrt();
    Foot {
        point: Point::new(sx * px, sy * py),
        ambiguous,
        local_reach,
    }
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn residual(a: f64, b: f64, x: f64, y: f64, t: f64) -> (f64, f64) {
    let ra = a * x / (t + a * a);
    let rb = b * y / (t + b * b);
    let f = ra * ra + rb * rb - 1.0;
    let df = -2.0 * (ra * ra / (t + a * a) + rb * rb / (t + b * b));
    (f, df)
}

fn solve_multiplier(a: f64, b: f64, x: f64, y: f64) -> f64 {
    // F(lo) >= 0 and F(hi) <= 0.
    let mut lo = -b * b + b * y;
    let mut hi = -b * b + (a * a * x * x + b * b * y * y).sqrt();
    let mut t = lo;
    for _ in 0..MAX_NEWTON {
        let (f, df) = residual(a, b, x, y, t);
        if f.abs() <= RESIDUAL_TOL {
            return t;
        }
        if f > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let next = t - f / df;
        t = if next > lo && next < hi && next.is_finite() {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (f, _) = residual(a, b, x, y, mid);
        if f.abs() <= RESIDUAL_TOL {
            return mid;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn brute(a: f64, b: f64, q: Point, n: usize) -> (Point, f64) {
        let mut best = (Point::zeros(), f64::INFINITY);
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let p = Point::new(a * th.cos(), b * th.sin());
            let d = (p - q).norm();
            if d < best.1 {
                best = (p, d);
            }
        }
        best
    }

    #[test]
    fn matches_dense_sampling() {
        let cases = [
            (2.0, 1.0, Point::new(1.0, 0.25)),
            (2.0, 1.0, Point::new(3.0, 2.0)),
            (0.9, 0.16, Point::new(0.0, 0.0)),
            (0.9, 0.1, Point::new(0.85, 0.01)),
            (0.9, 0.1, Point::new(-0.2, -0.05)),
            (1.0, 3.0, Point::new(0.4, -0.7)),
        ];
        for (a, b, q) in cases {
            let foot = nearest_on_ellipse(a, b, q);
            let (p, d) = brute(a, b, q, 400_000);
            let got = (foot.point - q).norm();
            assert!((got - d).abs() < 1e-6, "{a} {b} {q:?}: {got} vs {d}");
            if !foot.ambiguous {
                assert!((foot.point - p).norm() < 1e-4, "{:?} vs {p:?}", foot.point);
            }
            let on = (foot.point.x / a).powi(2) + (foot.point.y / b).powi(2);
            assert!((on - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn medial_axis_is_ambiguous() {
        let foot = nearest_on_ellipse(2.0, 1.0, Point::new(0.5, 0.0));
        assert!(foot.ambiguous);
        let foot = nearest_on_ellipse(2.0, 1.0, Point::new(1.9, 0.0));
        assert!(!foot.ambiguous);
        assert_eq!(foot.point, Point::new(2.0, 0.0));
    }

    #[test]
    fn tip_reach_is_curvature_radius() {
        let foot = nearest_on_ellipse(0.9, 0.1, Point::new(0.95, 0.0));
        assert!((foot.local_reach - 0.01 / 0.9).abs() < 1e-14);
        let foot = nearest_on_ellipse(0.9, 0.1, Point::new(0.0, 0.3));
        assert!((foot.local_reach - 0.1).abs() < 1e-14);
    }
}
