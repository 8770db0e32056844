//! Nonlocal velocity fields `V(rho)(x)`.
//!
//! Two crowd models are provided: an attraction/repulsion kernel added to a
//! drift, and a congestion model where a drift is slowed down by the local
//! density. Sums over the cloud run in index order so that results are
//! bitwise reproducible.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Bounds;
use crate::transport::{w2, ParticleCloud};
use crate::Point;

/// Below this distance from the origin the parabolic drift is undefined.
pub const SINGULARITY_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("drift is singular at ({}, {})", point.x, point.y)]
    DriftSingularity { point: Point },
    #[error("declared constant L = {declared} is exceeded by {quantity} = {estimate} (witness at ({}, {}))", witness.x, witness.y)]
    DeclaredBoundViolated {
        quantity: &'static str,
        estimate: f64,
        declared: f64,
        witness: Point,
    },
    #[error("probe needs at least 100 samples, got {0}")]
    TooFewSamples(usize),
}

/// Background velocity `w(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Drift {
    Zero,
    Constant { value: Point },
    /// `x -> matrix * x + offset`, with `matrix` given row by row.
    Linear { matrix: [[f64; 2]; 2], offset: Point },
    /// `w(x) = -(1 + x1^2, 2 x1 x2) / (2|x|)`, whose field lines are
    /// parabolas funnelling into the origin.
    Parabolic,
}

impl Drift {
    pub fn eval(&self, x: &Point) -> Result<Point, FieldError> {
        Ok(match self {
            Drift::Zero => Point::zeros(),
            Drift::Constant { value } => *value,
            Drift::Linear { matrix, offset } => Point::new(
                matrix[0][0] * x.x + matrix[0][1] * x.y,
                matrix[1][0] * x.x + matrix[1][1] * x.y,
            ) + offset,
            Drift::Parabolic => {
                let r = x.norm();
                if r < SINGULARITY_RADIUS {
                    return Err(FieldError::DriftSingularity { point: *x });
                }
                -Point::new(1.0 + x.x * x.x, 2.0 * x.x * x.y) / (2.0 * r)
            }
        })
    }
}

/// Attraction/repulsion kernel parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseParams {
    pub attraction: f64,
    pub repulsion: f64,
    pub attraction_range: f64,
    pub repulsion_range: f64,
    pub drift: Drift,
}

impl MorseParams {
    /// `K(z) = -A_a z/(2a^2) exp(-|z|^2/(2a^2)) + A_r z/(2r^2) exp(-|z|^2/(2r^2))`.
    pub fn kernel(&self, z: &Point) -> Point {
        let s = z.norm_squared();
        let a2 = self.attraction_range * self.attraction_range;
        let r2 = self.repulsion_range * self.repulsion_range;
        let scale = -self.attraction / (2.0 * a2) * (-s / (2.0 * a2)).exp()
            + self.repulsion / (2.0 * r2) * (-s / (2.0 * r2)).exp();
        z * scale
    }
}

/// Congestion model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionParams {
    /// Radius of the density bump.
    pub epsilon: f64,
    /// Saturation strength of the slowdown.
    pub kappa: f64,
    /// Normalization of the bump.
    pub beta: f64,
    pub drift: Drift,
}

impl CongestionParams {
    /// Bump `eta(r) = exp(1/((r/eps)^2 - 1)) / beta` on `r < eps`.
    pub fn bump(&self, r: f64) -> f64 {
        if r >= self.epsilon {
            return 0.0;
        }
        let u = (r / self.epsilon).min(1.0 - 1e-12);
        (1.0 / (u * u - 1.0)).exp() / self.beta
    }

    /// Slowdown `psi(s) = 1 - (2/pi) atan(kappa s^2)`, in `[0, 1]`.
    pub fn slowdown(&self, s: f64) -> f64 {
        1.0 - 2.0 / PI * (self.kappa * s * s).atan()
    }

    /// Local density `(1/N) sum_j eta(|x - y_j|)`.
    pub fn density(&self, cloud: &ParticleCloud, x: &Point) -> f64 {
        let sum: f64 = cloud.points().iter().map(|y| self.bump((x - y).norm())).sum();
        sum / cloud.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    AttractionRepulsion(MorseParams),
    Congestion(CongestionParams),
    /// A measure-independent drift.
    CustomDrift { drift: Drift },
}

/// A nonlocal field together with its declared bound/Lipschitz constant `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlocalField {
    pub kind: FieldKind,
    pub declared_l: f64,
}

impl NonlocalField {
    pub fn new(kind: FieldKind, declared_l: f64) -> Self {
        NonlocalField { kind, declared_l }
    }

    pub fn zero() -> Self {
        NonlocalField::new(FieldKind::CustomDrift { drift: Drift::Zero }, 0.0)
    }

    /// `V(cloud)(x)`.
    pub fn evaluate(&self, cloud: &ParticleCloud, x: &Point) -> Result<Point, FieldError> {
        match &self.kind {
            FieldKind::AttractionRepulsion(p) => eval_morse(p, cloud, x),
            FieldKind::Congestion(p) => eval_congestion(p, cloud, x),
            FieldKind::CustomDrift { drift } => drift.eval(x),
        }
    }

    /// `V(cloud)` at every point of `at`, evaluated in parallel. Each entry is
    /// computed independently, so the result does not depend on scheduling.
    pub fn evaluate_many(&self, cloud: &ParticleCloud, at: &[Point]) -> Result<Vec<Point>, FieldError> {
        at.par_iter().map(|x| self.evaluate(cloud, x)).collect()
    }
}

/// Attraction/repulsion field `w(x) + (1/N) sum_j K(x - y_j)`.
pub fn eval_morse(params: &MorseParams, cloud: &ParticleCloud, x: &Point) -> Result<Point, FieldError> {
    let mut sum = Point::zeros();
    for y in cloud.points() {
        sum += params.kernel(&(x - y));
    }
    Ok(params.drift.eval(x)? + sum / cloud.len() as f64)
}

/// Congestion field `w(x) psi((1/N) sum_j eta(|x - y_j|))`.
pub fn eval_congestion(
    params: &CongestionParams,
    cloud: &ParticleCloud,
    x: &Point,
) -> Result<Point, FieldError> {
    let w = params.drift.eval(x)?;
    Ok(w * params.slowdown(params.density(cloud, x)))
}

/// Empirical constants of a field over a workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeEstimate {
    /// `max |V(rho)(x)|`.
    pub sup_bound: f64,
    /// `max |V(rho)(x) - V(rho)(y)| / |x - y|`.
    pub lip_x: f64,
    /// `max_x |V(rho1)(x) - V(rho2)(x)| / W2(rho1, rho2)`.
    pub lip_w2: f64,
}

const PROBE_CLOUD: usize = 12;
const PROBE_POINTS_PER_PAIR: usize = 8;
const CLUSTER_RADIUS: f64 = 1.0;

fn uniform_in(rng: &mut ChaCha8Rng, b: &Bounds) -> Point {
    Point::new(
        rng.random_range(b.min.x..=b.max.x),
        rng.random_range(b.min.y..=b.max.y),
    )
}

/// Estimates `(sup_bound, lip_x, lip_w2)` from random clouds and point pairs
/// in `workspace`. Fails if any estimate exceeds `field.declared_l`.
///
/// Points closer than [`SINGULARITY_RADIUS`] to a drift singularity are
/// skipped. Half of the point pairs are local (offsets up to 2% of the
/// workspace diagonal) so that steep regions are resolved, and half of the
/// clouds are packed within unit distance of the evaluation points so that
/// short-range interactions show up.
pub fn probe_constants(
    field: &NonlocalField,
    workspace: &Bounds,
    samples: usize,
    seed: u64,
) -> Result<ProbeEstimate, FieldError> {
    if samples < 100 {
        return Err(FieldError::TooFewSamples(samples));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let local = 0.02 * workspace.diagonal();
    let random_cloud = |rng: &mut ChaCha8Rng| {
        ParticleCloud::new((0..PROBE_CLOUD).map(|_| uniform_in(rng, workspace)).collect())
            .expect("probe clouds are finite")
    };
    // clouds packed around a point, so short-range interactions are exercised
    let cluster = |rng: &mut ChaCha8Rng, at: &Point| {
        ParticleCloud::new(
            (0..PROBE_CLOUD)
                .map(|_| {
                    let th = rng.random_range(0.0..2.0 * PI);
                    at + Point::new(th.cos(), th.sin()) * rng.random_range(0.0..CLUSTER_RADIUS)
                })
                .collect(),
        )
        .expect("probe clouds are finite")
    };
    let eval = |cloud: &ParticleCloud, x: &Point| match field.evaluate(cloud, x) {
        Err(FieldError::DriftSingularity { .. }) => None,
        other => Some(other),
    };

    let mut est = ProbeEstimate {
        sup_bound: 0.0,
        lip_x: 0.0,
        lip_w2: 0.0,
    };
    let mut witness = [Point::zeros(); 3];

    for k in 0..samples {
        let x = uniform_in(&mut rng, workspace);
        let cloud = if k % 4 < 2 { cluster(&mut rng, &x) } else { random_cloud(&mut rng) };
        let y = if k % 2 == 0 {
            let th = rng.random_range(0.0..2.0 * PI);
            let r = rng.random_range(0.0..local);
            x + Point::new(th.cos(), th.sin()) * r
        } else {
            uniform_in(&mut rng, workspace)
        };
        let (Some(vx), Some(vy)) = (eval(&cloud, &x), eval(&cloud, &y)) else {
            continue;
        };
        let (vx, vy) = (vx?, vy?);
        if vx.norm() > est.sup_bound {
            est.sup_bound = vx.norm();
            witness[0] = x;
        }
        let dxy = (x - y).norm();
        if dxy > 0.0 && (vx - vy).norm() / dxy > est.lip_x {
            est.lip_x = (vx - vy).norm() / dxy;
            witness[1] = x;
        }
    }

    // measure perturbations
    let pairs = (samples / PROBE_POINTS_PER_PAIR).max(1);
    for k in 0..pairs {
        let clustered = k % 4 < 2;
        let center = uniform_in(&mut rng, workspace);
        let first = if clustered {
            cluster(&mut rng, &center)
        } else {
            random_cloud(&mut rng)
        };
        let spread = if k % 2 == 0 { local } else { 0.25 * workspace.diagonal() };
        let second = ParticleCloud::new(
            first
                .points()
                .iter()
                .map(|p| {
                    let th = rng.random_range(0.0..2.0 * PI);
                    p + Point::new(th.cos(), th.sin()) * rng.random_range(0.0..spread)
                })
                .collect(),
        )
        .expect("finite");
        let (dist, _) = w2(&first, &second).expect("equal sizes");
        if dist == 0.0 {
            continue;
        }
        for _ in 0..PROBE_POINTS_PER_PAIR {
            let x = if clustered {
                let th = rng.random_range(0.0..2.0 * PI);
                center + Point::new(th.cos(), th.sin()) * rng.random_range(0.0..CLUSTER_RADIUS)
            } else {
                uniform_in(&mut rng, workspace)
            };
            let (Some(a), Some(b)) = (eval(&first, &x), eval(&second, &x)) else {
                continue;
            };
            let ratio = (a? - b?).norm() / dist;
            if ratio > est.lip_w2 {
                est.lip_w2 = ratio;
                witness[2] = x;
            }
        }
    }

    let checks = [
        ("sup_bound", est.sup_bound, witness[0]),
        ("lip_x", est.lip_x, witness[1]),
        ("lip_w2", est.lip_w2, witness[2]),
    ];
    for (quantity, estimate, witness) in checks {
        if estimate > field.declared_l {
            return Err(FieldError::DeclaredBoundViolated {
                quantity,
                estimate,
                declared: field.declared_l,
                witness,
            });
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[(f64, f64)]) -> ParticleCloud {
        ParticleCloud::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn preset_morse() -> MorseParams {
        MorseParams {
            attraction: 4.0,
            repulsion: 7.0,
            attraction_range: 1.0 / 2f64.sqrt(),
            repulsion_range: 0.5,
            drift: Drift::Constant {
                value: Point::new(-0.3, -0.3),
            },
        }
    }

    fn exit_congestion() -> CongestionParams {
        CongestionParams {
            epsilon: 0.3,
            kappa: 1000.0,
            beta: 0.466,
            drift: Drift::Parabolic,
        }
    }

    #[test]
    fn morse_single_particle_feels_only_drift() {
        let p = preset_morse();
        let x = Point::new(0.3, -1.0);
        assert_eq!(p.kernel(&Point::zeros()), Point::zeros());
        assert_eq!(eval_morse(&p, &cloud(&[(0.3, -1.0)]), &x).unwrap(), Point::new(-0.3, -0.3));
    }

    #[test]
    fn morse_symmetric_pair_cancels() {
        let p = MorseParams {
            drift: Drift::Zero,
            ..preset_morse()
        };
        let v = eval_morse(&p, &cloud(&[(-0.4, 0.2), (0.4, -0.2)]), &Point::zeros()).unwrap();
        assert_eq!(v, Point::zeros());
    }

    #[test]
    fn morse_preset_matches_direct_summation() {
        let p = preset_morse();
        let pts = [(0.1, 0.2), (-0.5, 0.7), (1.3, -0.4)];
        let x = Point::new(0.25, 0.1);
        // written out from the kernel formula with A_a = 4, A_r = 7,
        // a = 1/sqrt(2), r = 0.5
        let mut expected = Point::new(-0.3, -0.3);
        for (yx, yy) in pts {
            let (zx, zy) = (x.x - yx, x.y - yy);
            let s = zx * zx + zy * zy;
            let f = -4.0 * (-s).exp() + 14.0 * (-2.0 * s).exp();
            expected += Point::new(zx * f, zy * f) / 3.0;
        }
        let got = eval_morse(&p, &cloud(&pts), &x).unwrap();
        assert!((got - expected).norm() < 1e-12, "{got:?} {expected:?}");
    }

    #[test]
    fn morse_kernel_is_odd() {
        let p = preset_morse();
        for z in [Point::new(0.3, 0.1), Point::new(-2.0, 5.0), Point::new(1e-8, 0.0)] {
            assert_eq!(p.kernel(&-z), -p.kernel(&z));
        }
    }

    #[test]
    fn congestion_isolated_particle() {
        let p = exit_congestion();
        let x = Point::new(3.0, 1.0);
        let c = cloud(&[(3.0, 1.0), (5.0, 5.0), (-3.0, 2.0), (4.0, -1.0)]);
        let w = Drift::Parabolic.eval(&x).unwrap();
        let expected = w * p.slowdown(p.bump(0.0) / 4.0);
        assert_eq!(eval_congestion(&p, &c, &x).unwrap(), expected);
        // eta(0) = exp(-1) / beta
        assert!((p.bump(0.0) - (-1f64).exp() / 0.466).abs() < 1e-15);
    }

    #[test]
    fn congestion_cluster_matches_direct_summation() {
        let p = exit_congestion();
        let x = Point::new(2.0, 0.5);
        let pts = [(2.05, 0.5), (1.9, 0.45), (2.0, 0.7), (2.1, 0.62)];
        let mut s = 0.0;
        for (yx, yy) in pts {
            let r = ((x.x - yx).powi(2) + (x.y - yy).powi(2)).sqrt();
            assert!(r < 0.3);
            s += (1.0 / ((r / 0.3).powi(2) - 1.0)).exp() / 0.466;
        }
        s /= 4.0;
        let psi = 1.0 - 2.0 / PI * (1000.0 * s * s).atan();
        let norm = (x.x * x.x + x.y * x.y).sqrt();
        let w = Point::new(-(1.0 + x.x * x.x) / (2.0 * norm), -(2.0 * x.x * x.y) / (2.0 * norm));
        let got = eval_congestion(&p, &cloud(&pts), &x).unwrap();
        assert!((got - w * psi).norm() < 1e-12);
    }

    #[test]
    fn congestion_saturates_to_zero_speed() {
        let p = exit_congestion();
        assert!(p.slowdown(1e6) < 1e-12);
        let x = Point::new(1.0, 0.0);
        let dense = cloud(&[(1.0, 0.0); 50]);
        assert!(eval_congestion(&p, &dense, &x).unwrap().norm() < Drift::Parabolic.eval(&x).unwrap().norm());
    }

    #[test]
    fn congestion_monotone_in_neighbours() {
        let p = exit_congestion();
        let x = Point::new(1.5, -0.5);
        let mut pts = vec![Point::new(1.5, -0.5)];
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let th = k as f64 * 0.7;
            pts.push(x + Point::new(th.cos(), th.sin()) * (0.01 * k as f64));
            // compare with the same normalization N so that only the neighbour sum changes
            let s: f64 = pts.iter().map(|y| p.bump((x - y).norm())).sum::<f64>() / 100.0;
            let speed = Drift::Parabolic.eval(&x).unwrap().norm() * p.slowdown(s);
            assert!(speed <= last);
            last = speed;
        }
    }

    #[test]
    fn congestion_drift_singularity() {
        let p = exit_congestion();
        let err = eval_congestion(&p, &cloud(&[(1.0, 1.0)]), &Point::zeros()).unwrap_err();
        assert!(matches!(err, FieldError::DriftSingularity { .. }));
    }

    #[test]
    fn probe_constant_and_zero_fields() {
        let ws = Bounds::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let c = NonlocalField::new(
            FieldKind::CustomDrift {
                drift: Drift::Constant {
                    value: Point::new(3.0, 4.0),
                },
            },
            5.0,
        );
        let e = probe_constants(&c, &ws, 200, 1).unwrap();
        assert_eq!((e.sup_bound, e.lip_x, e.lip_w2), (5.0, 0.0, 0.0));
        let e = probe_constants(&NonlocalField::zero(), &ws, 200, 1).unwrap();
        assert_eq!((e.sup_bound, e.lip_x, e.lip_w2), (0.0, 0.0, 0.0));
        assert!(matches!(probe_constants(&c, &ws, 50, 1), Err(FieldError::TooFewSamples(50))));
        let tight = NonlocalField { declared_l: 4.0, ..c };
        assert!(matches!(
            probe_constants(&tight, &ws, 200, 1),
            Err(FieldError::DeclaredBoundViolated { quantity: "sup_bound", .. })
        ));
    }

    #[test]
    fn probe_morse_is_stable_across_seeds() {
        let ws = Bounds::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let f = NonlocalField::new(FieldKind::AttractionRepulsion(preset_morse()), 10.0);
        let a = probe_constants(&f, &ws, 4000, 1).unwrap();
        let b = probe_constants(&f, &ws, 4000, 2).unwrap();
        for (x, y) in [(a.sup_bound, b.sup_bound), (a.lip_x, b.lip_x), (a.lip_w2, b.lip_w2)] {
            assert!(x > 0.0 && y > 0.0 && x.is_finite());
            assert!((x - y).abs() <= 0.1 * x.max(y), "{a:?} {b:?}");
        }
    }

    #[test]
    fn w2_lipschitz_probe_bounds_random_pairs() {
        let ws = Bounds::new(Point::new(-1.0, -1.0), Point::new(1.0, 1.0));
        let f = NonlocalField::new(FieldKind::AttractionRepulsion(preset_morse()), 10.0);
        let est = probe_constants(&f, &ws, 4000, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let a = ParticleCloud::new((0..12).map(|_| uniform_in(&mut rng, &ws)).collect()).unwrap();
            let b = ParticleCloud::new(a.points().iter().map(|p| p + Point::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05))).collect()).unwrap();
            let (d, _) = w2(&a, &b).unwrap();
            let sup = (0..16)
                .map(|_| {
                    let x = uniform_in(&mut rng, &ws);
                    (f.evaluate(&a, &x).unwrap() - f.evaluate(&b, &x).unwrap()).norm()
                })
                .fold(0.0, f64::max);
            // the Morse kernel is 10-Lipschitz, which bounds the true constant
            assert!(sup <= 10.0 * d + 1e-12);
            assert!(sup <= 1.2 * est.lip_w2 * d + 1e-12, "{sup} vs {} * {d}", est.lip_w2);
        }
    }
}
