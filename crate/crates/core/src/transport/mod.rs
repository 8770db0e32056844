//! Equal-weight empirical measures and quadratic optimal transport between
//! them.
//!
//! For two clouds of `N` particles with weights `1/N` an optimal plan can
//! always be taken to be a permutation, so the Wasserstein-2 distance reduces
//! to a linear assignment problem on squared distances.

pub mod assignment;

use thiserror::Error;

use crate::geometry::{GeometryError, ProxRegularSet};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("clouds have different sizes ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("a particle cloud needs at least one point")]
    EmptyCloud,
    #[error("particle {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("geodesic parameter {0} is outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("particle {index}: {source}")]
    OutOfReach {
        index: usize,
        #[source]
        source: GeometryError,
    },
    #[error("curve evaluation failed: {0}")]
    Curve(String),
}

/// The measure `(1/N) sum_i delta_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    points: Vec<Point>,
}

impl ParticleCloud {
    pub fn new(points: Vec<Point>) -> Result<Self, TransportError> {
        if points.is_empty() {
            return Err(TransportError::EmptyCloud);
        }
        if let Some(index) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(TransportError::NonFinite { index });
        }
        Ok(ParticleCloud { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn translated(&self, shift: Point) -> ParticleCloud {
        ParticleCloud {
            points: self.points.iter().map(|p| p + shift).collect(),
        }
    }

    pub fn mean(&self) -> Point {
        self.points.iter().sum::<Point>() / self.points.len() as f64
    }
}

/// An optimal matching between two clouds of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `permutation[i]` is the index in the second cloud matched to point `i`.
    pub permutation: Vec<usize>,
    /// Mean squared displacement `(1/N) sum_i |a_i - b_sigma(i)|^2`.
    pub cost: f64,
}

/// Mean squared displacement of the matching `permutation`.
pub fn plan_cost(a: &ParticleCloud, b: &ParticleCloud, permutation: &[usize]) -> f64 {
    let sum: f64 = a
        .points
        .iter()
        .zip(permutation)
        .map(|(x, &j)| (x - b.points[j]).norm_squared())
        .sum();
    sum / a.len() as f64
}

fn check_sizes(a: &ParticleCloud, b: &ParticleCloud) -> Result<(), TransportError> {
    if a.len() != b.len() {
        return Err(TransportError::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Exact quadratic Wasserstein distance and an optimal plan.
pub fn w2(a: &ParticleCloud, b: &ParticleCloud) -> Result<(f64, Assignment), TransportError> {
    check_sizes(a, b)?;
    let n = a.len();
    let mut cost = Vec::with_capacity(n * n);
    for x in &a.points {
        for y in &b.points {
            cost.push((x - y).norm_squared());
        }
    }
    let permutation = assignment::solve(n, &cost);
    let cost = plan_cost(a, b, &permutation);
    Ok((cost.sqrt(), Assignment { permutation, cost }))
}

/// `sqrt((1/N) sum_i |a_i - b_i|^2)`: the cost of the identity matching, an
/// upper bound on `w2(a, b)`.
pub fn identity_coupling_distance(a: &ParticleCloud, b: &ParticleCloud) -> Result<f64, TransportError> {
    check_sizes(a, b)?;
    let identity: Vec<usize> = (0..a.len()).collect();
    Ok(plan_cost(a, b, &identity).sqrt())
}

/// Point on the displacement geodesic from `a` to `b` along `plan`.
pub fn geodesic(
    a: &ParticleCloud,
    b: &ParticleCloud,
    plan: &Assignment,
    t: f64,
) -> Result<ParticleCloud, TransportError> {
    check_sizes(a, b)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(TransportError::ParameterOutOfRange(t));
    }
    let points = a
        .points
        .iter()
        .zip(&plan.permutation)
        .map(|(x, &j)| x * (1.0 - t) + b.points[j] * t)
        .collect();
    Ok(ParticleCloud { points })
}

/// Pushforward of `a` by the metric projection onto `set`: the unique
/// nearest measure supported in the set.
pub fn project_measure(a: &ParticleCloud, set: &ProxRegularSet) -> Result<ParticleCloud, TransportError> {
    let points = a
        .points
        .iter()
        .enumerate()
        .map(|(index, x)| {
            set.project(x)
                .map_err(|source| TransportError::OutOfReach { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParticleCloud { points })
}

/// A curve of particle clouds with per-particle velocities, e.g. a computed
/// trajectory or a closed-form motion.
pub trait MeasureCurve {
    fn cloud_at(&self, t: f64) -> Result<ParticleCloud, TransportError>;
    fn velocity_at(&self, t: f64) -> Result<Vec<Point>, TransportError>;
}

/// Particles moving with constant individual velocities.
#[derive(Debug, Clone)]
pub struct ConstantVelocityCloud {
    pub start: ParticleCloud,
    pub velocity: Vec<Point>,
}

impl MeasureCurve for ConstantVelocityCloud {
    fn cloud_at(&self, t: f64) -> Result<ParticleCloud, TransportError> {
        ParticleCloud::new(
            self.start
                .points
                .iter()
                .zip(&self.velocity)
                .map(|(x, v)| x + v * t)
                .collect(),
        )
    }

    fn velocity_at(&self, _t: f64) -> Result<Vec<Point>, TransportError> {
        Ok(self.velocity.clone())
    }
}

/// Compares a centered difference of `W2^2` along two curves with the
/// first-variation formula `2 * integral <u - v, x - y> dPi` over the optimal
/// plan at `t`. Returns the absolute discrepancy.
pub fn w2_derivative_check(
    first: &impl MeasureCurve,
    second: &impl MeasureCurve,
    t: f64,
    h: f64,
) -> Result<f64, TransportError> {
    let w2sq = |s: f64| -> Result<f64, TransportError> {
        let (_, plan) = w2(&first.cloud_at(s)?, &second.cloud_at(s)?)?;
        Ok(plan.cost)
    };
    let fd = (w2sq(t + h)? - w2sq(t - h)?) / (2.0 * h);

    let (a, b) = (first.cloud_at(t)?, second.cloud_at(t)?);
    let (u, v) = (first.velocity_at(t)?, second.velocity_at(t)?);
    let (_, plan) = w2(&a, &b)?;
    let inner: f64 = plan
        .permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| (u[i] - v[j]).dot(&(a.points[i] - b.points[j])))
        .sum();
    let analytic = 2.0 * inner / a.len() as f64;
    Ok((fd - analytic).abs())
}
