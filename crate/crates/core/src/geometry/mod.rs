//! Prox-regular viability regions in the plane.
//!
//! A [`ProxRegularSet`] pairs a [`Shape`] with a declared reach `r`: within
//! distance `r` of the set the metric projection is single-valued. Shapes
//! describe the *admissible* region, so an elliptic obstacle appears as
//! [`Shape::EllipseComplement`] and a wall with an exit as
//! [`Shape::WallWithExit`].

mod ellipse;
mod hausdorff;
mod moving;
mod reach;

pub use hausdorff::{directed_hausdorff, hausdorff};
pub use moving::{Motion, MovingPart, MovingSet};
pub use reach::check_reach;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Point;
use ellipse::nearest_on_ellipse;

/// Points with signed distance at most this are treated as members.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Maximum |signed distance| accepted by [`ProxRegularSet::outward_normal`].
pub const BOUNDARY_TOL: f64 = 1e-6;
/// Central finite-difference step for signed-distance gradients.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point at distance {distance} from the set lies outside the reach {reach}")]
    OutOfReach { distance: f64, reach: f64 },
    #[error("boundary is not smooth at ({}, {})", point.x, point.y)]
    NonSmoothPoint { point: Point },
    #[error("point is not on the boundary (signed distance {signed_distance})")]
    NotOnBoundary { signed_distance: f64 },
    #[error("time {t} is outside the horizon [0, {horizon}]")]
    TimeOutOfHorizon { t: f64, horizon: f64 },
    #[error("unsupported motion: {0}")]
    UnsupportedMotion(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error(
        "reach test failed at boundary point ({}, {}) against ({}, {}): {lhs} > {rhs}",
        boundary.x, boundary.y, witness.x, witness.y
    )]
    ReachTestFailed {
        boundary: Point,
        witness: Point,
        lhs: f64,
        rhs: f64,
    },
}

/// Axis-aligned rectangle used as the workspace for sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn new(min: Point, max: Point) -> Self {
        Bounds { min, max }
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.x >= self.min.x && x.x <= self.max.x && x.y >= self.min.y && x.y <= self.max.y
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    /// Cell-centered grid of roughly `n` points covering the rectangle.
    pub fn grid(&self, n: usize) -> Vec<Point> {
        let side = (n as f64).sqrt().ceil().max(1.0) as usize;
        let span = self.max - self.min;
        let mut out = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                out.push(Point::new(
                    self.min.x + span.x * (i as f64 + 0.5) / side as f64,
                    self.min.y + span.y * (j as f64 + 0.5) / side as f64,
                ));
            }
        }
        out
    }
}

/// Planar shape descriptors. Each variant names the admissible region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// `{x : normal . x <= offset}` with a unit normal.
    HalfSpace { normal: Point, offset: f64 },
    Ball { center: Point, radius: f64 },
    BallComplement { center: Point, radius: f64 },
    /// Closed exterior of an ellipse whose first semi-axis points along `angle`.
    EllipseComplement {
        center: Point,
        semi_axes: Point,
        angle: f64,
    },
    Box { min: Point, max: Point },
    /// Everything farther than `thickness` from the two vertical rays
    /// `{x1 = x, |x2 - exit_center| > exit_half_width}`. The thickened rays are
    /// capsules, so the exit jambs are rounded.
    WallWithExit {
        x: f64,
        exit_center: f64,
        exit_half_width: f64,
        thickness: f64,
    },
    Intersection { parts: Vec<Shape> },
}

/// Nearest-point query result.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Foot {
    pub point: Point,
    pub ambiguous: bool,
    pub local_reach: f64,
}

impl Foot {
    fn identity(x: Point) -> Self {
        Foot {
            point: x,
            ambiguous: false,
            local_reach: f64::INFINITY,
        }
    }
}

fn rotate(v: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

impl Shape {
    pub fn half_space(normal: Point, offset: f64) -> Self {
        let n = normal.norm();
        Shape::HalfSpace {
            normal: normal / n,
            offset: offset / n,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidShape(msg.to_string()));
        match self {
            Shape::HalfSpace { normal, offset } => {
                if !offset.is_finite() || (normal.norm() - 1.0).abs() > 1e-12 {
                    return bad("half-space needs a unit normal and finite offset");
                }
            }
            Shape::Ball { radius, .. } | Shape::BallComplement { radius, .. } => {
                if !(*radius > 0.0) {
                    return bad("radius must be positive");
                }
            }
            Shape::EllipseComplement { semi_axes, .. } => {
                if !(semi_axes.x > 0.0 && semi_axes.y > 0.0) {
                    return bad("semi-axes must be positive");
                }
            }
            Shape::Box { min, max } => {
                if !(min.x < max.x && min.y < max.y) {
                    return bad("box min must be below max");
                }
            }
            Shape::WallWithExit {
                exit_half_width,
                thickness,
                ..
            } => {
                if !(*thickness > 0.0 && exit_half_width > thickness) {
                    return bad("wall needs 0 < thickness < exit half-width");
                }
            }
            Shape::Intersection { parts } => {
                if parts.is_empty() {
                    return bad("intersection needs at least one part");
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Signed distance: negative in the interior, positive outside. Exact for
    /// primitives; the max of the parts for intersections.
    pub fn signed_distance(&self, x: &Point) -> f64 {
        match self {
            Shape::HalfSpace { normal, offset } => normal.dot(x) - offset,
            Shape::Ball { center, radius } => (x - center).norm() - radius,
            Shape::BallComplement { center, radius } => radius - (x - center).norm(),
            Shape::EllipseComplement {
                center,
                semi_axes,
                angle,
            } => {
                let q = rotate(x - center, -angle);
                let foot = nearest_on_ellipse(semi_axes.x, semi_axes.y, q);
                let d = (q - foot.point).norm();
                if (q.x / semi_axes.x).powi(2) + (q.y / semi_axes.y).powi(2) < 1.0 {
                    d
                } else {
                    -d
                }
            }
            Shape::Box { min, max } => {
                let c = (min + max) * 0.5;
                let h = (max - min) * 0.5;
                let q = (x - c).abs() - h;
                let outside = Point::new(q.x.max(0.0), q.y.max(0.0)).norm();
                outside + q.x.max(q.y).min(0.0)
            }
            Shape::WallWithExit { thickness, .. } => thickness - self.wall_foot(x).1,
            Shape::Intersection { parts } => parts
                .iter()
                .map(|p| p.signed_distance(x))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.signed_distance(x) <= MEMBERSHIP_TOL
    }

    /// Nearest ray point and distance to it, for the wall.
    fn wall_foot(&self, x: &Point) -> (Point, f64) {
        let Shape::WallWithExit {
            x: wx,
            exit_center,
            exit_half_width,
            ..
        } = self
        else {
            unreachable!("wall_foot on a non-wall shape")
        };
        let up = Point::new(*wx, x.y.max(exit_center + exit_half_width));
        let down = Point::new(*wx, x.y.min(exit_center - exit_half_width));
        let (du, dd) = ((x - up).norm(), (x - down).norm());
        if du <= dd {
            (up, du)
        } else {
            (down, dd)
        }
    }

    /// Nearest point of the shape, without any reach gate.
    pub(crate) fn nearest(&self, x: &Point) -> Foot {
        if !matches!(self, Shape::Intersection { .. }) && self.signed_distance(x) <= 0.0 {
            return Foot::identity(*x);
        }
        match self {
            Shape::HalfSpace { normal, offset } => {
                Foot::identity(x - normal * (normal.dot(x) - offset))
            }
            Shape::Ball { center, radius } => {
                Foot::identity(center + (x - center) * (radius / (x - center).norm()))
            }
            Shape::BallComplement { center, radius } => {
                let r = x - center;
                let n = r.norm();
                if n == 0.0 {
                    Foot {
                        point: center + Point::new(*radius, 0.0),
                        ambiguous: true,
                        local_reach: *radius,
                    }
                } else {
                    Foot {
                        point: center + r * (radius / n),
                        ambiguous: false,
                        local_reach: *radius,
                    }
                }
            }
            Shape::EllipseComplement {
                center,
                semi_axes,
                angle,
            } => {
                let q = rotate(x - center, -angle);
                let foot = nearest_on_ellipse(semi_axes.x, semi_axes.y, q);
                Foot {
                    point: center + rotate(foot.point, *angle),
                    ambiguous: foot.ambiguous,
                    local_reach: foot.local_reach,
                }
            }
            Shape::Box { min, max } => Foot::identity(Point::new(
                x.x.clamp(min.x, max.x),
                x.y.clamp(min.y, max.y),
            )),
            Shape::WallWithExit { thickness, .. } => {
                let (q, d) = self.wall_foot(x);
                if d == 0.0 {
                    Foot {
                        point: q + Point::new(*thickness, 0.0),
                        ambiguous: true,
                        local_reach: *thickness,
                    }
                } else {
                    Foot {
                        point: q + (x - q) * (thickness / d),
                        ambiguous: false,
                        local_reach: *thickness,
                    }
                }
            }
            Shape::Intersection { parts } => nearest_in_intersection(parts, x),
        }
    }

    /// Gradient of the signed distance, i.e. the outward unit normal at the
    /// nearest boundary point. `None` where the boundary has a corner or the
    /// gradient is undefined.
    pub(crate) fn sd_gradient(&self, x: &Point) -> Option<Point> {
        let unit = |v: Point| {
            let n = v.norm();
            (n > 0.0 && n.is_finite()).then(|| v / n)
        };
        match self {
            Shape::HalfSpace { normal, .. } => Some(*normal),
            Shape::Ball { center, .. } => unit(x - center),
            Shape::BallComplement { center, .. } => unit(center - x),
            Shape::EllipseComplement {
                center,
                semi_axes,
                angle,
            } => {
                let q = rotate(x - center, -angle);
                let foot = nearest_on_ellipse(semi_axes.x, semi_axes.y, q);
                let d = (q - foot.point).norm();
                let local = if d > 1e-9 * semi_axes.x.max(semi_axes.y) {
                    let inside =
                        (q.x / semi_axes.x).powi(2) + (q.y / semi_axes.y).powi(2) < 1.0;
                    if foot.ambiguous {
                        return None;
                    }
                    if inside {
                        q - foot.point
                    } else {
                        foot.point - q
                    }
                } else {
                    let p = foot.point;
                    -Point::new(p.x / semi_axes.x.powi(2), p.y / semi_axes.y.powi(2))
                };
                unit(rotate(local, *angle))
            }
            Shape::Box { min, max } => {
                let c = (min + max) * 0.5;
                let h = (max - min) * 0.5;
                let r = x - c;
                let q = r.abs() - h;
                if q.x > 0.0 || q.y > 0.0 {
                    let outside = Point::new(q.x.max(0.0) * r.x.signum(), q.y.max(0.0) * r.y.signum());
                    if q.x > 0.0 && q.y > 0.0 {
                        return unit(outside);
                    }
                    let near_corner = q.x.abs().min(q.y.abs()) <= FD_STEP;
                    return if near_corner && q.x.max(q.y) <= FD_STEP {
                        None
                    } else {
                        unit(outside)
                    };
                }
                if (q.x - q.y).abs() <= FD_STEP {
                    None
                } else if q.x > q.y {
                    Some(Point::new(r.x.signum(), 0.0))
                } else {
                    Some(Point::new(0.0, r.y.signum()))
                }
            }
            Shape::WallWithExit { .. } => {
                let (q, _) = self.wall_foot(x);
                unit(q - x)
            }
            Shape::Intersection { parts } => {
                let mut sds: Vec<(f64, &Shape)> =
                    parts.iter().map(|p| (p.signed_distance(x), p)).collect();
                sds.sort_by(|a, b| b.0.total_cmp(&a.0));
                if sds.len() > 1 && sds[0].0 - sds[1].0 <= FD_STEP && sds[1].0 >= -FD_STEP {
                    return None;
                }
                sds[0].1.sd_gradient(x)
            }
        }
    }

    /// Points on the boundary of the shape that fall inside `bounds`.
    pub fn boundary_samples(&self, n: usize, bounds: &Bounds) -> Vec<Point> {
        use std::f64::consts::PI;
        let n = n.max(4);
        let mut out = Vec::new();
        match self {
            Shape::HalfSpace { normal, offset } => {
                let base = normal * *offset;
                let dir = Point::new(-normal.y, normal.x);
                let (lo, hi) = clip_line(&base, &dir, bounds);
                if lo <= hi {
                    for k in 0..n {
                        let s = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                        out.push(base + dir * s);
                    }
                }
            }
            Shape::Ball { center, radius } | Shape::BallComplement { center, radius } => {
                for k in 0..n {
                    let th = 2.0 * PI * k as f64 / n as f64;
                    out.push(center + Point::new(th.cos(), th.sin()) * *radius);
                }
            }
            Shape::EllipseComplement {
                center,
                semi_axes,
                angle,
            } => {
                for k in 0..n {
                    let th = 2.0 * PI * k as f64 / n as f64;
                    let local = Point::new(semi_axes.x * th.cos(), semi_axes.y * th.sin());
                    out.push(center + rotate(local, *angle));
                }
            }
            Shape::Box { min, max } => {
                let per = n / 4;
                for k in 0..per {
                    let s = k as f64 / per as f64;
                    out.push(Point::new(min.x + (max.x - min.x) * s, min.y));
                    out.push(Point::new(max.x, min.y + (max.y - min.y) * s));
                    out.push(Point::new(max.x - (max.x - min.x) * s, max.y));
                    out.push(Point::new(min.x, max.y - (max.y - min.y) * s));
                }
            }
            Shape::WallWithExit {
                x,
                exit_center,
                exit_half_width,
                thickness,
            } => {
                let top = exit_center + exit_half_width;
                let bottom = exit_center - exit_half_width;
                let (ymax, ymin) = (bounds.max.y.max(top), bounds.min.y.min(bottom));
                let per = (n / 2).max(8);
                let arc = per / 4;
                let line = per - arc;
                for (anchor, far, down) in [(top, ymax, false), (bottom, ymin, true)] {
                    for k in 0..line / 2 {
                        let y = anchor + (far - anchor) * k as f64 / (line / 2) as f64;
                        out.push(Point::new(x - thickness, y));
                        out.push(Point::new(x + thickness, y));
                    }
                    for k in 0..=arc {
                        let th = PI * k as f64 / arc as f64;
                        let dy = if down { th.sin() } else { -th.sin() };
                        out.push(Point::new(x + thickness * th.cos(), anchor + thickness * dy));
                    }
                }
            }
            Shape::Intersection { parts } => {
                let per = (n / parts.len()).max(4);
                for p in parts {
                    for s in p.boundary_samples(per, bounds) {
                        if self.signed_distance(&s) <= MEMBERSHIP_TOL {
                            out.push(s);
                        }
                    }
                }
            }
        }
        out.retain(|p| bounds.contains(p));
        out
    }

    /// The shape rotated by `angle` about `pivot`, then shifted by `shift`.
    pub fn moved(&self, shift: Point, angle: f64, pivot: Point) -> Result<Shape, GeometryError> {
        let map = |p: Point| pivot + rotate(p - pivot, angle) + shift;
        Ok(match self {
            Shape::HalfSpace { normal, offset } => {
                let n = rotate(*normal, angle);
                let anchor = map(normal * *offset);
                Shape::HalfSpace {
                    normal: n,
                    offset: n.dot(&anchor),
                }
            }
            Shape::Ball { center, radius } => Shape::Ball {
                center: map(*center),
                radius: *radius,
            },
            Shape::BallComplement { center, radius } => Shape::BallComplement {
                center: map(*center),
                radius: *radius,
            },
            Shape::EllipseComplement {
                center,
                semi_axes,
                angle: a0,
            } => Shape::EllipseComplement {
                center: map(*center),
                semi_axes: *semi_axes,
                angle: a0 + angle,
            },
            Shape::Box { .. } | Shape::WallWithExit { .. } if angle != 0.0 => {
                return Err(GeometryError::UnsupportedMotion(
                    "boxes and walls can only translate".into(),
                ))
            }
            Shape::Box { min, max } => Shape::Box {
                min: min + shift,
                max: max + shift,
            },
            Shape::WallWithExit {
                x,
                exit_center,
                exit_half_width,
                thickness,
            } => Shape::WallWithExit {
                x: x + shift.x,
                exit_center: exit_center + shift.y,
                exit_half_width: *exit_half_width,
                thickness: *thickness,
            },
            Shape::Intersection { parts } => Shape::Intersection {
                parts: parts
                    .iter()
                    .map(|p| p.moved(shift, angle, pivot))
                    .collect::<Result<_, _>>()?,
            },
        })
    }
}

/// Parameter interval of `base + s * dir` inside `bounds`.
fn clip_line(base: &Point, dir: &Point, bounds: &Bounds) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for axis in 0..2 {
        let (b, d) = (base[axis], dir[axis]);
        let (mn, mx) = (bounds.min[axis], bounds.max[axis]);
        if d.abs() < 1e-15 {
            if b < mn || b > mx {
                return (1.0, 0.0);
            }
        } else {
            let (s0, s1) = ((mn - b) / d, (mx - b) / d);
            lo = lo.max(s0.min(s1));
            hi = hi.min(s0.max(s1));
        }
    }
    (lo, hi)
}

const FALLBACK_SAMPLES: usize = 256;
const DYKSTRA_ITERS: usize = 2000;

fn nearest_in_intersection(parts: &[Shape], x: &Point) -> Foot {
    let feasible = |p: &Point| parts.iter().all(|s| s.signed_distance(p) <= MEMBERSHIP_TOL);
    if feasible(x) {
        return Foot::identity(*x);
    }
    let mut cands: Vec<(f64, Foot)> = parts
        .iter()
        .filter(|s| s.signed_distance(x) > 0.0)
        .map(|s| s.nearest(x))
        .filter(|f| feasible(&f.point))
        .map(|f| ((f.point - x).norm(), f))
        .collect();

    if cands.is_empty() {
        // Corner case: refine by local boundary sampling, then polish with
        // Dykstra's alternating projections.
        let reach = parts
            .iter()
            .map(|s| s.nearest(x).local_reach)
            .fold(f64::INFINITY, f64::min);
        let radius = parts
            .iter()
            .map(|s| (s.nearest(x).point - x).norm())
            .fold(0.0, f64::max)
            * 4.0
            + 1e-6;
        let window = Bounds::new(x - Point::new(radius, radius), x + Point::new(radius, radius));
        for s in parts {
            for p in s.boundary_samples(FALLBACK_SAMPLES, &window) {
                if feasible(&p) {
                    cands.push((
                        (p - x).norm(),
                        Foot {
                            point: p,
                            ambiguous: false,
                            local_reach: reach,
                        },
                    ));
                }
            }
        }
        let polished = dykstra(parts, x);
        if feasible(&polished) {
            cands.push((
                (polished - x).norm(),
                Foot {
                    point: polished,
                    ambiguous: false,
                    local_reach: reach,
                },
            ));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    match cands.as_slice() {
        [] => Foot {
            point: *x,
            ambiguous: true,
            local_reach: 0.0,
        },
        [(_, only)] => *only,
        [(d0, first), (d1, second), ..] => {
            let tie = (d1 - d0) <= 1e-12 * d0.max(1.0)
                && (first.point - second.point).norm() > 1e-9;
            Foot {
                ambiguous: first.ambiguous || tie,
                ..*first
            }
        }
    }
}

fn dykstra(parts: &[Shape], x: &Point) -> Point {
    let mut y = *x;
    let mut inc = vec![Point::zeros(); parts.len()];
    for _ in 0..DYKSTRA_ITERS {
        let prev = y;
        for (s, p) in parts.iter().zip(inc.iter_mut()) {
            let z = y + *p;
            let proj = s.nearest(&z).point;
            *p = z - proj;
            y = proj;
        }
        if (y - prev).norm() <= 1e-14 {
            break;
        }
    }
    y
}

/// A closed set together with its declared reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxRegularSet {
    pub shape: Shape,
    pub reach: f64,
}

impl ProxRegularSet {
    pub fn new(shape: Shape, reach: f64) -> Result<Self, GeometryError> {
        shape.validate()?;
        if !(reach > 0.0) {
            return Err(GeometryError::InvalidShape("reach must be positive".into()));
        }
        Ok(ProxRegularSet { shape, reach })
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.shape.contains(x)
    }

    pub fn signed_distance(&self, x: &Point) -> f64 {
        self.shape.signed_distance(x)
    }

    /// Euclidean distance from `x` to the set; zero on the set.
    pub fn distance(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Intersection { .. } => {
                if self.shape.contains(x) {
                    0.0
                } else {
                    (self.shape.nearest(x).point - x).norm()
                }
            }
            s => s.signed_distance(x).max(0.0),
        }
    }

    /// Metric projection, refused beyond the declared reach.
    pub fn project(&self, x: &Point) -> Result<Point, GeometryError> {
        if self.shape.contains(x) {
            return Ok(*x);
        }
        let foot = self.shape.nearest(x);
        let distance = (foot.point - x).norm();
        if distance >= self.reach || foot.ambiguous {
            return Err(GeometryError::OutOfReach {
                distance,
                reach: self.reach,
            });
        }
        Ok(foot.point)
    }

    /// Metric projection gated by the exact local reach at the foot point
    /// rather than the declared global reach. Fails only where the nearest
    /// point is not unique.
    pub fn project_local(&self, x: &Point) -> Result<Point, GeometryError> {
        if self.shape.contains(x) {
            return Ok(*x);
        }
        let foot = self.shape.nearest(x);
        let distance = (foot.point - x).norm();
        if foot.ambiguous || distance >= foot.local_reach {
            return Err(GeometryError::OutOfReach {
                distance,
                reach: foot.local_reach,
            });
        }
        Ok(foot.point)
    }

    /// Outward unit normal at a boundary point.
    pub fn outward_normal(&self, x: &Point) -> Result<Point, GeometryError> {
        let sd = self.shape.signed_distance(x);
        if sd.abs() > BOUNDARY_TOL {
            return Err(GeometryError::NotOnBoundary { signed_distance: sd });
        }
        let non_smooth = || GeometryError::NonSmoothPoint { point: *x };
        match &self.shape {
            Shape::Intersection { parts } => {
                let active = parts
                    .iter()
                    .filter(|p| p.signed_distance(x).abs() <= BOUNDARY_TOL)
                    .count();
                if active > 1 {
                    return Err(non_smooth());
                }
                self.fd_gradient(x).ok_or_else(non_smooth)
            }
            s => s.sd_gradient(x).ok_or_else(non_smooth),
        }
    }

    /// Outward normal at the boundary point nearest to `x` (which may be off
    /// the boundary).
    pub fn boundary_normal(&self, x: &Point) -> Result<Point, GeometryError> {
        self.shape
            .sd_gradient(x)
            .ok_or(GeometryError::NonSmoothPoint { point: *x })
    }

    /// Central finite-difference gradient of the signed distance.
    pub fn fd_gradient(&self, x: &Point) -> Option<Point> {
        let h = FD_STEP;
        let f = |p: Point| self.shape.signed_distance(&p);
        let g = Point::new(
            (f(x + Point::new(h, 0.0)) - f(x - Point::new(h, 0.0))) / (2.0 * h),
            (f(x + Point::new(0.0, h)) - f(x - Point::new(0.0, h))) / (2.0 * h),
        );
        let n = g.norm();
        (n > 0.5 && n.is_finite()).then(|| g / n)
    }

    pub fn boundary_samples(&self, n: usize, bounds: &Bounds) -> Vec<Point> {
        self.shape.boundary_samples(n, bounds)
    }
}
