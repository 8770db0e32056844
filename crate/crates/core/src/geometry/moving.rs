use serde::{Deserialize, Serialize};

use super::{GeometryError, ProxRegularSet, Shape};
use crate::Point;

/// Rigid motion of one constituent of a moving set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Motion {
    Static,
    Translation { velocity: Point },
    /// Turns about `pivot` so that at time `t` the shape is rotated by
    /// `-omega * t` (clockwise for positive `omega`), the orientation of the
    /// rotating-obstacle implicit function `f(t, x)`.
    Rotation { pivot: Point, omega: f64 },
}

impl Motion {
    pub fn apply(&self, shape: &Shape, t: f64) -> Result<Shape, GeometryError> {
        match self {
            Motion::Static => Ok(shape.clone()),
            Motion::Translation { velocity } => shape.moved(velocity * t, 0.0, Point::zeros()),
            Motion::Rotation { pivot, omega } => shape.moved(Point::zeros(), -omega * t, *pivot),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingPart {
    pub shape: Shape,
    pub motion: Motion,
}

/// Time-dependent viability region `C(t)`, the intersection of its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingSet {
    pub parts: Vec<MovingPart>,
    pub reach: f64,
    pub horizon: f64,
    /// Declared Hausdorff-Lipschitz constant `M` of `t -> C(t)`.
    pub lipschitz_m: f64,
}

impl MovingSet {
    pub fn new(
        parts: Vec<MovingPart>,
        reach: f64,
        horizon: f64,
        lipschitz_m: f64,
    ) -> Result<Self, GeometryError> {
        if parts.is_empty() {
            return Err(GeometryError::InvalidShape("moving set has no parts".into()));
        }
        if !(horizon >= 0.0 && lipschitz_m >= 0.0) {
            return Err(GeometryError::InvalidShape(
                "horizon and M must be nonnegative".into(),
            ));
        }
        let ms = MovingSet {
            parts,
            reach,
            horizon,
            lipschitz_m,
        };
        ms.eval_unchecked(0.0)?;
        Ok(ms)
    }

    pub fn fixed(shape: Shape, reach: f64, horizon: f64) -> Result<Self, GeometryError> {
        MovingSet::new(
            vec![MovingPart {
                shape,
                motion: Motion::Static,
            }],
            reach,
            horizon,
            0.0,
        )
    }

    /// `C(t)` for `t` in `[0, horizon]`.
    pub fn eval(&self, t: f64) -> Result<ProxRegularSet, GeometryError> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + 1e-12)) {
            return Err(GeometryError::TimeOutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        self.eval_unchecked(t)
    }

    /// Evaluation without the horizon check, for finite differences that
    /// straddle the ends of the horizon.
    pub fn eval_unchecked(&self, t: f64) -> Result<ProxRegularSet, GeometryError> {
        let mut shapes = self
            .parts
            .iter()
            .map(|p| p.motion.apply(&p.shape, t))
            .collect::<Result<Vec<_>, _>>()?;
        let shape = if shapes.len() == 1 {
            shapes.pop().unwrap()
        } else {
            Shape::Intersection { parts: shapes }
        };
        ProxRegularSet::new(shape, self.reach)
    }

    pub fn is_static(&self) -> bool {
        self.parts.iter().all(|p| match &p.motion {
            Motion::Static => true,
            Motion::Translation { velocity } => velocity.norm() == 0.0,
            Motion::Rotation { omega, .. } => *omega == 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hausdorff, Bounds};
    use std::f64::consts::PI;

    #[test]
    fn static_set_is_constant() {
        let ms = MovingSet::fixed(Shape::half_space(Point::new(1.0, 0.0), 0.0), 1.0, 5.0).unwrap();
        assert_eq!(ms.eval(0.0).unwrap(), ms.eval(3.3).unwrap());
        assert!(matches!(
            ms.eval(6.0),
            Err(GeometryError::TimeOutOfHorizon { .. })
        ));
    }

    #[test]
    fn translating_ellipse_starts_at_preset_center() {
        // f(t,x) = -(x1 - 0.5t + 2)^2 - 4(x2 - 0.5t + 4)^2 + 2
        let ms = MovingSet::new(
            vec![MovingPart {
                shape: Shape::EllipseComplement {
                    center: Point::new(-2.0, -4.0),
                    semi_axes: Point::new(2f64.sqrt(), 0.5f64.sqrt()),
                    angle: 0.0,
                },
                motion: Motion::Translation {
                    velocity: Point::new(0.5, 0.5),
                },
            }],
            0.35,
            20.0,
            0.5 * 2f64.sqrt(),
        )
        .unwrap();
        let c0 = ms.eval(0.0).unwrap();
        match &c0.shape {
            Shape::EllipseComplement { center, .. } => assert_eq!(*center, Point::new(-2.0, -4.0)),
            _ => unreachable!(),
        }
        let f = |t: f64, x: Point| -(x.x - 0.5 * t + 2.0).powi(2) - 4.0 * (x.y - 0.5 * t + 4.0).powi(2) + 2.0;
        for (t, x) in [(0.0, Point::new(-0.5, -4.0)), (3.0, Point::new(0.0, -2.5)), (5.0, Point::new(3.0, 0.0))] {
            let set = ms.eval(t).unwrap();
            assert_eq!(set.contains(&x), f(t, x) <= 1e-9, "t={t} x={x:?}");
        }
    }

    #[test]
    fn half_turn_swaps_back() {
        let omega = 1.0;
        let ms = MovingSet::new(
            vec![MovingPart {
                shape: Shape::EllipseComplement {
                    center: Point::new(1.1, 0.0),
                    semi_axes: Point::new(0.9, 0.1),
                    angle: 0.0,
                },
                motion: Motion::Rotation {
                    pivot: Point::new(1.1, 0.0),
                    omega,
                },
            }],
            0.011,
            10.0,
            0.9,
        )
        .unwrap();
        let ws = Bounds::new(Point::new(-1.0, -2.0), Point::new(3.0, 2.0));
        let a = ms.eval(0.0).unwrap();
        let half = ms.eval(PI / omega).unwrap();
        assert!(hausdorff(&a, &half, 4096, &ws) < 1e-9);
        let quarter = ms.eval(PI / (2.0 * omega)).unwrap();
        assert!(quarter.contains(&Point::new(1.9, 0.0)));
        assert!(!quarter.contains(&Point::new(1.1, 0.8)));
        // matches the implicit rotating-ellipse function at t = 0.4
        let t = 0.4;
        let f = |x: Point| {
            let (s, c) = (omega * t).sin_cos();
            let u = ((x.x - 1.1) * c - x.y * s) / 0.9;
            let v = ((x.x - 1.1) * s + x.y * c) / 0.1;
            -u * u - v * v + 1.0
        };
        let set = ms.eval(t).unwrap();
        for x in [Point::new(1.9, -0.3), Point::new(1.8, 0.3), Point::new(0.4, 0.3)] {
            assert_eq!(set.contains(&x), f(x) <= 0.0, "{x:?}");
        }
    }
}
