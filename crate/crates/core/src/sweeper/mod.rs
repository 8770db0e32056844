//! The catching-up scheme for measure sweeping processes.
//!
//! The horizon `[0, T]` is split into `2n` intervals of length `tau`. On each
//! cycle `[2k tau, (2k+2) tau]` the scheme
//!
//! 1. transports the cloud over `[2k tau, (2k+1) tau]` along the doubled field
//!    `2 V(rho_{2k tau})`, with the measure argument frozen at the start of the
//!    cycle;
//! 2. projects every particle onto `C((2k+2) tau)`, which the continuous
//!    interpolant traverses at constant speed over `[(2k+1) tau, (2k+2) tau]`.
//!
//! Recorded velocities are `2 V(rho_{2k tau})(x_i)` on transport intervals and
//! `(P(x_i) - x_i) / tau` on projection intervals.

pub mod diagnostics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, NonlocalField};
use crate::geometry::{GeometryError, MovingSet, ProxRegularSet, MEMBERSHIP_TOL};
use crate::transport::{MeasureCurve, ParticleCloud, TransportError};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

impl std::str::FromStr for Integrator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(format!("unknown integrator `{other}` (expected euler or rk4)")),
        }
    }
}

/// How projections are protected against leaving the region where the
/// nearest point is unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReachGuard {
    /// Refuse to start unless `2 tau (L + M) < r`, and refuse any projection
    /// farther than the declared reach `r`.
    #[default]
    Declared,
    /// Skip the start-up feasibility test and refuse only projections whose
    /// foot point is not unique (exact local reach of the shape).
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tau: f64,
    pub horizon: f64,
    pub substeps: usize,
    pub integrator: Integrator,
    pub guard: ReachGuard,
}

impl RunConfig {
    pub fn new(tau: f64, horizon: f64) -> Self {
        RunConfig {
            tau,
            horizon,
            substeps: 1,
            integrator: Integrator::Rk4,
            guard: ReachGuard::Declared,
        }
    }

    /// Number of catching-up cycles `n` with `T = 2 n tau`.
    pub fn cycles(&self) -> Result<usize, SweepError> {
        let ratio = self.horizon / (2.0 * self.tau);
        let n = ratio.round();
        if !(self.tau > 0.0) || !ratio.is_finite() || n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(SweepError::MeshMismatch {
                tau: self.tau,
                horizon: self.horizon,
            });
        }
        Ok(n as usize)
    }
}

/// Time-indexed clouds produced by [`run`].
#[derive(Clone, PartialEq)]
pub struct Trajectory {
    /// Mesh `0, tau, 2 tau, ..., T`.
    pub times: Vec<f64>,
    pub clouds: Vec<ParticleCloud>,
    /// `velocities[j]` holds the per-particle velocity on `[t_j, t_{j+1}]`.
    pub velocities: Vec<Vec<Point>>,
    pub field: NonlocalField,
    pub moving_set: MovingSet,
    pub config: RunConfig,
}

impl Trajectory {
    pub fn tau(&self) -> f64 {
        self.config.tau
    }

    pub fn lipschitz_l(&self) -> f64 {
        self.field.declared_l
    }

    pub fn lipschitz_m(&self) -> f64 {
        self.moving_set.lipschitz_m
    }

    pub fn reach(&self) -> f64 {
        self.moving_set.reach
    }

    /// `2 (L + M)`, the speed bound of the scheme.
    pub fn scheme_speed_bound(&self) -> f64 {
        2.0 * (self.lipschitz_l() + self.lipschitz_m())
    }

    pub fn final_cloud(&self) -> &ParticleCloud {
        self.clouds.last().expect("trajectories are never empty")
    }

    /// Number of completed mesh intervals.
    pub fn completed_intervals(&self) -> usize {
        self.velocities.len()
    }

    pub fn particle_count(&self) -> usize {
        self.clouds[0].len()
    }
}

// printing every cloud would bury error messages
impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("mesh_times", &self.times.len())
            .field("particles", &self.clouds.first().map_or(0, ParticleCloud::len))
            .field("last_time", &self.times.last())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("projection failed in cycle {cycle} for particle {particle}: {source}")]
    OutOfReach {
        cycle: usize,
        particle: usize,
        #[source]
        source: GeometryError,
        /// Everything computed up to and including the failing transport step.
        partial: Box<Trajectory>,
    },
    #[error("horizon {horizon} is not an even multiple of tau = {tau}")]
    MeshMismatch { tau: f64, horizon: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

fn rk4_step(field: &NonlocalField, frozen: &ParticleCloud, x: Point, h: f64) -> Result<Point, FieldError> {
    let f = |p: Point| field.evaluate(frozen, &p).map(|v| v * 2.0);
    let k1 = f(x)?;
    let k2 = f(x + k1 * (h / 2.0))?;
    let k3 = f(x + k2 * (h / 2.0))?;
    let k4 = f(x + k3 * h)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Advances every particle of `cloud` by `dt` along `x' = 2 V(frozen)(x)`.
pub fn transport_substep(
    cloud: &ParticleCloud,
    frozen: &ParticleCloud,
    field: &NonlocalField,
    dt: f64,
    substeps: usize,
    integrator: Integrator,
) -> Result<ParticleCloud, FieldError> {
    let substeps = substeps.max(1);
    let h = dt / substeps as f64;
    let points = cloud
        .points()
        .par_iter()
        .map(|&x0| {
            let mut x = x0;
            for _ in 0..substeps {
                x = match integrator {
                    Integrator::Euler => x + field.evaluate(frozen, &x)? * (2.0 * h),
                    Integrator::Rk4 => rk4_step(field, frozen, x, h)?,
                };
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>, FieldError>>()?;
    Ok(ParticleCloud::new(points).expect("finite transport"))
}

fn guarded_projection(set: &ProxRegularSet, x: &Point, guard: ReachGuard) -> Result<Point, GeometryError> {
    match guard {
        ReachGuard::Declared => set.project(x),
        ReachGuard::Local => set.project_local(x),
    }
}

/// Checks the start-up conditions of [`run`] and returns the number of cycles.
pub fn check_preconditions(
    initial: &ParticleCloud,
    field: &NonlocalField,
    moving_set: &MovingSet,
    config: &RunConfig,
) -> Result<usize, SweepError> {
    let cycles = config.cycles()?;
    if (moving_set.horizon - config.horizon).abs() > 1e-12 * config.horizon.max(1.0) {
        return Err(SweepError::PreconditionViolated(format!(
            "moving-set horizon {} differs from run horizon {}",
            moving_set.horizon, config.horizon
        )));
    }
    let c0 = moving_set.eval(0.0)?;
    if let Some(i) = initial.points().iter().position(|p| c0.signed_distance(p) > MEMBERSHIP_TOL) {
        return Err(SweepError::PreconditionViolated(format!(
            "initial particle {i} lies outside C(0)"
        )));
    }
    if config.guard == ReachGuard::Declared {
        let depth = 2.0 * config.tau * (field.declared_l + moving_set.lipschitz_m);
        if !(depth < moving_set.reach) {
            return Err(SweepError::PreconditionViolated(format!(
                "tau-feasibility: 2 tau (L + M) = {depth} is not below the reach {}",
                moving_set.reach
            )));
        }
    }
    Ok(cycles)
}

/// Runs the catching-up scheme from `initial`.
pub fn run(
    initial: &ParticleCloud,
    field: &NonlocalField,
    moving_set: &MovingSet,
    config: &RunConfig,
) -> Result<Trajectory, SweepError> {
    let cycles = check_preconditions(initial, field, moving_set, config)?;
    let tau = config.tau;
    let mesh = 2 * cycles;
    let times: Vec<f64> = (0..=mesh)
        .map(|j| if j == mesh { config.horizon } else { j as f64 * tau })
        .collect();

    let mut traj = Trajectory {
        times: Vec::with_capacity(mesh + 1),
        clouds: Vec::with_capacity(mesh + 1),
        velocities: Vec::with_capacity(mesh),
        field: field.clone(),
        moving_set: moving_set.clone(),
        config: *config,
    };
    traj.times.push(0.0);
    traj.clouds.push(initial.clone());

    for k in 0..cycles {
        let frozen = traj.clouds[2 * k].clone();
        let drive = field.evaluate_many(&frozen, frozen.points())?;
        let moved = transport_substep(&frozen, &frozen, field, tau, config.substeps, config.integrator)?;
        traj.velocities.push(drive.iter().map(|v| v * 2.0).collect());
        traj.times.push(times[2 * k + 1]);
        traj.clouds.push(moved.clone());

        let target = moving_set.eval(times[2 * k + 2])?;
        let projected: Vec<Result<Point, (usize, GeometryError)>> = moved
            .points()
            .par_iter()
            .enumerate()
            .map(|(i, x)| guarded_projection(&target, x, config.guard).map_err(|e| (i, e)))
            .collect();
        let mut points = Vec::with_capacity(moved.len());
        for r in projected {
            match r {
                Ok(p) => points.push(p),
                Err((particle, source)) => {
                    return Err(SweepError::OutOfReach {
                        cycle: k,
                        particle,
                        source,
                        partial: Box::new(traj),
                    })
                }
            }
        }
        traj.velocities.push(
            points
                .iter()
                .zip(moved.points())
                .map(|(p, x)| (p - x) / tau)
                .collect(),
        );
        traj.times.push(times[2 * k + 2]);
        traj.clouds.push(ParticleCloud::new(points)?);
    }
    Ok(traj)
}

/// Steps per mesh interval when re-integrating inside a transport interval.
const CURVE_RESOLUTION: f64 = 64.0;

impl Trajectory {
    fn locate(&self, t: f64) -> Result<usize, TransportError> {
        let last = *self.times.last().unwrap();
        if !(t >= 0.0 && t <= last) || self.velocities.is_empty() {
            return Err(TransportError::Curve(format!("time {t} outside [0, {last}]")));
        }
        Ok(((t / self.tau()).floor() as usize).min(self.velocities.len() - 1))
    }
}

/// The continuous interpolant: frozen-field flow on transport intervals and
/// straight segments toward the projection on projection intervals.
impl MeasureCurve for Trajectory {
    fn cloud_at(&self, t: f64) -> Result<ParticleCloud, TransportError> {
        let j = self.locate(t)?;
        let dt = t - self.times[j];
        let start = &self.clouds[j];
        if j % 2 == 0 {
            let steps = (CURVE_RESOLUTION * dt / self.tau()).ceil().max(1.0) as usize;
            transport_substep(start, start, &self.field, dt, steps, Integrator::Rk4)
                .map_err(|e| TransportError::Curve(e.to_string()))
        } else {
            ParticleCloud::new(
                start
                    .points()
                    .iter()
                    .zip(&self.velocities[j])
                    .map(|(x, v)| x + v * dt)
                    .collect(),
            )
        }
    }

    fn velocity_at(&self, t: f64) -> Result<Vec<Point>, TransportError> {
        let j = self.locate(t)?;
        if j % 2 == 0 {
            let here = self.cloud_at(t)?;
            self.field
                .evaluate_many(&self.clouds[j], here.points())
                .map(|v| v.into_iter().map(|v| v * 2.0).collect())
                .map_err(|e| TransportError::Curve(e.to_string()))
        } else {
            Ok(self.velocities[j].clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Drift, FieldKind, MorseParams};
    use crate::geometry::{Motion, MovingPart, Shape};

    fn cloud(pts: &[(f64, f64)]) -> ParticleCloud {
        ParticleCloud::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn drift(d: Drift, l: f64) -> NonlocalField {
        NonlocalField::new(FieldKind::CustomDrift { drift: d }, l)
    }

    fn morse() -> NonlocalField {
        NonlocalField::new(
            FieldKind::AttractionRepulsion(MorseParams {
                attraction: 4.0,
                repulsion: 7.0,
                attraction_range: 1.0 / 2f64.sqrt(),
                repulsion_range: 0.5,
                drift: Drift::Constant {
                    value: Point::new(-0.3, -0.3),
                },
            }),
            10.0,
        )
    }

    fn moving_half_space(speed: f64, horizon: f64) -> MovingSet {
        MovingSet::new(
            vec![MovingPart {
                shape: Shape::half_space(Point::new(1.0, 0.0), 0.0),
                motion: Motion::Translation {
                    velocity: Point::new(-speed, 0.0),
                },
            }],
            f64::INFINITY,
            horizon,
            speed,
        )
        .unwrap()
    }

    #[test]
    fn constant_field_moves_by_twice_dt() {
        let f = drift(Drift::Constant { value: Point::new(0.5, -1.0) }, 2.0);
        let c = cloud(&[(0.0, 0.0), (1.0, 1.0)]);
        for integ in [Integrator::Euler, Integrator::Rk4] {
            let out = transport_substep(&c, &c, &f, 0.1, 3, integ).unwrap();
            for (a, b) in c.points().iter().zip(out.points()) {
                assert!((b - a - Point::new(0.1, -0.2)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_field_rk4_local_error() {
        let f = drift(
            Drift::Linear {
                matrix: [[-1.0, 0.0], [0.0, -1.0]],
                offset: Point::zeros(),
            },
            10.0,
        );
        let c = cloud(&[(1.0, -2.0)]);
        let dt = 0.01;
        let out = transport_substep(&c, &c, &f, dt, 1, Integrator::Rk4).unwrap();
        let exact = c.points()[0] * (-2.0 * dt).exp();
        // local error of RK4 is (2 dt)^5 / 120 times |x|
        let err = (out.points()[0] - exact).norm();
        assert!(err <= (2.0 * dt).powi(5) / 120.0 * c.points()[0].norm() * 1.01, "{err}");
        assert!(err > 0.0);
    }

    #[test]
    fn morse_rk4_matches_fine_euler() {
        let f = morse();
        let c = cloud(&[(0.0, 0.0), (0.4, 0.1), (-0.2, 0.5)]);
        let rk = transport_substep(&c, &c, &f, 0.01, 1, Integrator::Rk4).unwrap();
        let eu = transport_substep(&c, &c, &f, 0.01, 100_000, Integrator::Euler).unwrap();
        for (a, b) in rk.points().iter().zip(eu.points()) {
            assert!((a - b).norm() < 1e-6, "{}", (a - b).norm());
        }
    }

    #[test]
    fn zero_field_static_set_is_constant() {
        let ms = MovingSet::fixed(Shape::half_space(Point::new(1.0, 0.0), 0.0), f64::INFINITY, 1.0).unwrap();
        let c = cloud(&[(-1.0, 0.0), (-0.5, 3.0), (0.0, 1.0)]);
        let traj = run(&c, &NonlocalField::zero(), &ms, &RunConfig::new(0.05, 1.0)).unwrap();
        assert_eq!(traj.clouds.len(), 21);
        assert!(traj.clouds.iter().all(|cl| cl == &c));
    }

    #[test]
    fn moving_half_space_pushes_particle() {
        let (m, tau, t) = (0.7, 0.01, 2.0);
        let ms = moving_half_space(m, t);
        let traj = run(&cloud(&[(0.0, 0.3)]), &NonlocalField::zero(), &ms, &RunConfig::new(tau, t)).unwrap();
        for k in 0..=(t / (2.0 * tau)).round() as usize {
            let x = traj.clouds[2 * k].points()[0];
            assert!((x.x + 2.0 * k as f64 * tau * m).abs() <= 1e-9);
            assert_eq!(x.y, 0.3);
        }
    }

    #[test]
    fn far_obstacle_gives_pure_transport() {
        let f = morse();
        let ms = MovingSet::fixed(
            Shape::BallComplement {
                center: Point::new(50.0, 50.0),
                radius: 1.0,
            },
            1.0,
            0.4,
        )
        .unwrap();
        let c = cloud(&[(0.0, 0.0), (0.4, 0.1), (-0.2, 0.5)]);
        let tau = 0.01;
        let traj = run(&c, &f, &ms, &RunConfig::new(tau, 0.4)).unwrap();
        // plain flow of x' = V(rho)(x) with the measure refreshed every 2 tau
        let mut x = c.clone();
        for _ in 0..20 {
            x = transport_substep(&x, &x, &f, tau, 1, Integrator::Rk4).unwrap();
        }
        for (a, b) in traj.final_cloud().points().iter().zip(x.points()) {
            assert_eq!(a, b);
        }
        // and it is close to the fully coupled flow with a fine step
        let mut y = c.clone();
        let steps = 4000;
        for _ in 0..steps {
            let v = f.evaluate_many(&y, y.points()).unwrap();
            y = ParticleCloud::new(y.points().iter().zip(&v).map(|(p, v)| p + v * (0.4 / steps as f64)).collect()).unwrap();
        }
        for (a, b) in traj.final_cloud().points().iter().zip(y.points()) {
            assert!((a - b).norm() < 5e-2);
        }
    }

    #[test]
    fn mesh_and_feasibility_checks() {
        let ms = moving_half_space(1.0, 1.0);
        let c = cloud(&[(-1.0, 0.0)]);
        let f = NonlocalField::zero();
        assert!(matches!(run(&c, &f, &ms, &RunConfig::new(0.3, 1.0)), Err(SweepError::MeshMismatch { .. })));
        let outside = cloud(&[(1.0, 0.0)]);
        assert!(matches!(
            run(&outside, &f, &ms, &RunConfig::new(0.05, 1.0)),
            Err(SweepError::PreconditionViolated(_))
        ));
        let tight = MovingSet { reach: 0.05, ..ms };
        let err = run(&c, &f, &tight, &RunConfig::new(0.05, 1.0)).unwrap_err();
        assert!(err.to_string().contains("tau-feasibility"));
    }

    #[test]
    fn out_of_reach_aborts_with_partial_state() {
        // obstacle sweeping at speed 2 across a particle, reach 0.05
        let ms = MovingSet::new(
            vec![MovingPart {
                shape: Shape::BallComplement {
                    center: Point::new(-1.0, 0.0),
                    radius: 0.5,
                },
                motion: Motion::Translation {
                    velocity: Point::new(5.0, 0.0),
                },
            }],
            0.5,
            1.0,
            5.0,
        )
        .unwrap();
        let c = cloud(&[(0.0, 0.0)]);
        let cfg = RunConfig {
            guard: ReachGuard::Local,
            ..RunConfig::new(0.1, 1.0)
        };
        match run(&c, &NonlocalField::zero(), &ms, &cfg) {
            Err(SweepError::OutOfReach { partial, particle, .. }) => {
                assert_eq!(particle, 0);
                assert!(partial.clouds.len() >= 2);
            }
            other => panic!("expected OutOfReach, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_curve_interpolates_mesh() {
        let ms = moving_half_space(0.5, 0.4);
        let f = morse();
        let c = cloud(&[(-1.0, 0.0), (-1.5, 0.4), (-0.6, -0.3)]);
        let traj = run(&c, &f, &ms, &RunConfig::new(0.02, 0.4)).unwrap();
        for j in [0, 1, 2, 7] {
            let at = traj.cloud_at(traj.times[j]).unwrap();
            for (a, b) in at.points().iter().zip(traj.clouds[j].points()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        let end = traj.cloud_at(traj.times[4] - 1e-12).unwrap();
        for (a, b) in end.points().iter().zip(traj.clouds[4].points()) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
