//! Runtime checks of the invariants a catching-up trajectory must satisfy.
//!
//! Residuals of the normal-cone and no-flux conditions use the velocity
//! averaged over a full cycle, `(x_{2k+2} - x_{2k}) / (2 tau)`. The two
//! half-step velocities recorded by the scheme are `2V` and a pure projection
//! speed, neither of which satisfies the limit conditions on its own; their
//! average does, up to `O(tau)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SweepError, Trajectory};
use crate::geometry::{hausdorff, Bounds, MovingSet, FD_STEP};
use crate::transport::{identity_coupling_distance, w2};
use crate::Point;

/// Slack added to exact (post-projection) support inclusion.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Slack added to the scheme speed bound.
pub const SPEED_TOL: f64 = 1e-9;
/// Slack added to the W2 time-Lipschitz bound.
pub const LIPSCHITZ_TOL: f64 = 1e-6;
/// Slack allowed below zero in the stability estimate.
pub const STABILITY_TOL: f64 = 1e-6;
/// Hausdorff samples per mesh time in [`stability_gap`].
pub const STABILITY_SAMPLES: usize = 4096;
/// Exact W2 spot checks of non-adjacent mesh pairs in [`w2_lipschitz`].
const LIPSCHITZ_SPOT_CHECKS: usize = 16;

/// One line of a diagnostics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantRow {
    pub t: f64,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl InvariantRow {
    fn new(t: f64, name: &str, value: f64, bound: f64) -> Self {
        InvariantRow {
            t,
            name: name.to_string(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// A row reported for trend analysis only.
    fn informational(t: f64, name: &str, value: f64) -> Self {
        InvariantRow {
            t,
            name: name.to_string(),
            value,
            bound: f64::INFINITY,
            pass: true,
        }
    }
}

/// Invariant families selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Support,
    Speed,
    Cone,
    Noflux,
    Stability,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Support, Check::Speed, Check::Cone, Check::Noflux, Check::Stability];

    /// Parses `support`, `speed`, `cone`, `noflux`, `stability` or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Check>, String> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "all" => return Ok(Check::ALL.to_vec()),
                "support" => out.push(Check::Support),
                "speed" => out.push(Check::Speed),
                "cone" => out.push(Check::Cone),
                "noflux" => out.push(Check::Noflux),
                "stability" => out.push(Check::Stability),
                other => return Err(format!("unknown check `{other}`")),
            }
        }
        Ok(out)
    }
}

/// Support inclusion: exact at even mesh times, within `2 tau (L + M)` at odd
/// ones.
pub fn support_inclusion(traj: &Trajectory) -> Result<Vec<InvariantRow>, SweepError> {
    let depth = traj.tau() * traj.scheme_speed_bound();
    traj.times
        .par_iter()
        .zip(&traj.clouds)
        .enumerate()
        .map(|(j, (&t, cloud))| {
            let set = traj.moving_set.eval(t)?;
            let worst = cloud.points().iter().map(|p| set.distance(p)).fold(0.0, f64::max);
            let bound = if j % 2 == 0 { SUPPORT_TOL } else { depth };
            Ok(InvariantRow::new(t, "support_inclusion", worst, bound))
        })
        .collect()
}

/// Recorded speeds against `2 (L + M)`; the tighter limit-solution bound
/// `2L + M` is reported alongside as information.
pub fn speed_bound(traj: &Trajectory) -> Vec<InvariantRow> {
    let (l, m) = (traj.lipschitz_l(), traj.lipschitz_m());
    let mut rows = Vec::with_capacity(2 * traj.velocities.len());
    for (j, v) in traj.velocities.iter().enumerate() {
        let t = traj.times[j];
        let worst = v.iter().map(|v| v.norm()).fold(0.0, f64::max);
        rows.push(InvariantRow::new(t, "speed_bound", worst, 2.0 * (l + m) + SPEED_TOL));
        let within = v.iter().filter(|v| v.norm() <= 2.0 * l + m + SPEED_TOL).count();
        rows.push(InvariantRow::informational(
            t,
            "speed_limit_fraction",
            within as f64 / v.len() as f64,
        ));
    }
    rows
}

/// W2 time-Lipschitz bound `W2(rho_t, rho_s) <= 2 (L + M) |t - s|`.
///
/// Adjacent mesh pairs are checked with the identity coupling, an upper bound
/// on W2 (falling back to the exact distance if that bound is too loose). By
/// the triangle inequality this covers every pair of mesh times; a few
/// distant pairs are additionally checked with the exact distance.
pub fn w2_lipschitz(traj: &Trajectory) -> Result<Vec<InvariantRow>, SweepError> {
    let speed = traj.scheme_speed_bound();
    let mut rows: Vec<InvariantRow> = (1..traj.clouds.len())
        .into_par_iter()
        .map(|j| {
            let (a, b) = (&traj.clouds[j - 1], &traj.clouds[j]);
            let dt = traj.times[j] - traj.times[j - 1];
            let bound = speed * dt + LIPSCHITZ_TOL;
            let mut d = identity_coupling_distance(a, b)?;
            if d > bound {
                d = w2(a, b)?.0;
            }
            Ok(InvariantRow::new(traj.times[j], "w2_lipschitz_step", d, bound))
        })
        .collect::<Result<_, SweepError>>()?;

    let last = traj.clouds.len() - 1;
    let stride = (last / LIPSCHITZ_SPOT_CHECKS).max(2);
    let spot: Vec<InvariantRow> = (0..last)
        .step_by(stride)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|i| {
            let j = last - i / 2;
            if j <= i {
                return Ok(None);
            }
            let (d, _) = w2(&traj.clouds[i], &traj.clouds[j])?;
            let bound = speed * (traj.times[j] - traj.times[i]) + LIPSCHITZ_TOL;
            Ok(Some(InvariantRow::new(traj.times[j], "w2_lipschitz_pair", d, bound)))
        })
        .collect::<Result<Vec<_>, SweepError>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.extend(spot);
    Ok(rows)
}

/// Residual of one particle. `None` marks particles skipped at non-smooth
/// boundary points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleResidual {
    pub particle: usize,
    pub boundary: bool,
    pub residual: Option<f64>,
}

impl ParticleResidual {
    pub fn max_of(list: &[ParticleResidual]) -> f64 {
        list.iter().filter_map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn check_projection_index(traj: &Trajectory, mesh_index: usize) -> Result<usize, SweepError> {
    if mesh_index.is_multiple_of(2) || mesh_index >= traj.completed_intervals() {
        return Err(SweepError::PreconditionViolated(format!(
            "mesh index {mesh_index} does not start a completed projection interval"
        )));
    }
    Ok(mesh_index / 2)
}

fn cycle_velocity(traj: &Trajectory, k: usize, i: usize) -> Point {
    (traj.clouds[2 * k + 2].points()[i] - traj.clouds[2 * k].points()[i]) / (2.0 * traj.tau())
}

/// Normal-cone residual on the cycle whose projection interval starts at
/// `mesh_index` (odd).
///
/// With `d = v - V(rho)(x)`, `v` the cycle-averaged velocity and `x` the
/// projected position: interior particles (farther than `2 tau (L + M)` from
/// the boundary) report `|d|`; boundary-adjacent ones report the part of `d`
/// not in the inward normal direction, `|d - (d.n) n| + max(d.n, 0)`.
pub fn normal_cone_residual(traj: &Trajectory, mesh_index: usize) -> Result<Vec<ParticleResidual>, SweepError> {
    let k = check_projection_index(traj, mesh_index)?;
    let set = traj.moving_set.eval(traj.times[2 * k + 2])?;
    let band = traj.tau() * traj.scheme_speed_bound();
    let landed = &traj.clouds[2 * k + 2];
    Ok((0..landed.len())
        .into_par_iter()
        .map(|i| {
            let x = landed.points()[i];
            let drive = traj.velocities[2 * k][i] / 2.0;
            let d = cycle_velocity(traj, k, i) - drive;
            let depth = -set.signed_distance(&x);
            if depth > band {
                return ParticleResidual {
                    particle: i,
                    boundary: false,
                    residual: Some(d.norm()),
                };
            }
            let residual = set.boundary_normal(&x).ok().map(|n| {
                let along = d.dot(&n);
                (d - n * along).norm() + along.max(0.0)
            });
            ParticleResidual {
                particle: i,
                boundary: true,
                residual,
            }
        })
        .collect())
}

/// Space-time outward normal `(xi, eta)` of `graph C` at `(t, x)`, from
/// central differences of the signed distance to `C(t)`.
pub fn space_time_normal(ms: &MovingSet, t: f64, x: &Point) -> Result<(f64, Point), SweepError> {
    let h = FD_STEP;
    let sd = |s: f64, p: &Point| -> Result<f64, SweepError> { Ok(ms.eval_unchecked(s)?.signed_distance(p)) };
    let xi = (sd(t + h, x)? - sd(t - h, x)?) / (2.0 * h);
    let eta = Point::new(
        (sd(t, &(x + Point::new(h, 0.0)))? - sd(t, &(x - Point::new(h, 0.0)))?) / (2.0 * h),
        (sd(t, &(x + Point::new(0.0, h)))? - sd(t, &(x - Point::new(0.0, h)))?) / (2.0 * h),
    );
    let norm = (xi * xi + eta.norm_squared()).sqrt();
    Ok((xi / norm, eta / norm))
}

/// Particles on the boundary at both ends of a cycle that were projected
/// during it.
const RIDING_TOL: f64 = 1e-8;

/// No-flux residual `|xi + v . eta|` for particles riding the boundary over
/// the cycle whose projection interval starts at `mesh_index` (odd).
pub fn noflux_residual(traj: &Trajectory, mesh_index: usize) -> Result<Vec<ParticleResidual>, SweepError> {
    let k = check_projection_index(traj, mesh_index)?;
    let (t0, t2) = (traj.times[2 * k], traj.times[2 * k + 2]);
    let start_set = traj.moving_set.eval(t0)?;
    let end_set = traj.moving_set.eval(t2)?;
    let riding: Vec<usize> = (0..traj.particle_count())
        .filter(|&i| {
            let x0 = traj.clouds[2 * k].points()[i];
            let x1 = traj.clouds[2 * k + 1].points()[i];
            start_set.signed_distance(&x0).abs() <= RIDING_TOL && end_set.signed_distance(&x1) > 0.0
        })
        .collect();
    riding
        .into_par_iter()
        .map(|i| {
            let x = traj.clouds[2 * k + 2].points()[i];
            let v = cycle_velocity(traj, k, i);
            let (xi, eta) = space_time_normal(&traj.moving_set, t2, &x)?;
            let residual = (xi + v.dot(&eta)).abs();
            Ok(ParticleResidual {
                particle: i,
                boundary: true,
                residual: residual.is_finite().then_some(residual),
            })
        })
        .collect()
}

/// Per-cycle maxima of the normal-cone and no-flux residuals as report rows.
pub fn residual_rows(traj: &Trajectory, checks: &[Check]) -> Result<Vec<InvariantRow>, SweepError> {
    let mut rows = Vec::new();
    for j in (1..traj.completed_intervals()).step_by(2) {
        let t = traj.times[j];
        if checks.contains(&Check::Cone) {
            let r = normal_cone_residual(traj, j)?;
            rows.push(InvariantRow::informational(t, "normal_cone_residual", ParticleResidual::max_of(&r)));
        }
        if checks.contains(&Check::Noflux) {
            let r = noflux_residual(traj, j)?;
            rows.push(InvariantRow::informational(t, "noflux_residual", ParticleResidual::max_of(&r)));
        }
    }
    Ok(rows)
}

/// Slack `RHS(t) - r(t)` of the stability estimate between two runs that
/// share the field, the initial cloud and the constants `L`, `M`, `r`:
///
/// ```text
/// r(t)   = W2(rho_t, rho~_t)^2 / 2
/// RHS(t) = (r(0) + (6L + 2M) int_0^t Delta) * exp((4L + (3L + M) / (2 reach)) t)
/// ```
///
/// where `Delta(s)` is the sampled Hausdorff distance between the two moving
/// sets inside `bounds` and the integral uses the trapezoid rule on the mesh.
pub fn stability_gap(first: &Trajectory, second: &Trajectory, bounds: &Bounds) -> Result<Vec<(f64, f64)>, SweepError> {
    let mismatch = |what: &str| SweepError::PreconditionViolated(format!("constant mismatch: {what}"));
    if first.field != second.field {
        return Err(mismatch("fields differ"));
    }
    if first.lipschitz_m() != second.lipschitz_m() || first.reach() != second.reach() {
        return Err(mismatch("M or reach differ"));
    }
    if first.times != second.times {
        return Err(mismatch("time meshes differ"));
    }
    if first.clouds[0] != second.clouds[0] {
        return Err(mismatch("initial clouds differ"));
    }
    let (l, m, reach) = (first.lipschitz_l(), first.lipschitz_m(), first.reach());

    let per_time: Vec<(f64, f64)> = first
        .times
        .par_iter()
        .enumerate()
        .map(|(j, &t)| {
            let (d, _) = w2(&first.clouds[j], &second.clouds[j])?;
            let delta = hausdorff(
                &first.moving_set.eval(t)?,
                &second.moving_set.eval(t)?,
                STABILITY_SAMPLES,
                bounds,
            );
            Ok((0.5 * d * d, delta))
        })
        .collect::<Result<_, SweepError>>()?;

    let rate = 4.0 * l + (3.0 * l + m) / (2.0 * reach);
    let r0 = per_time[0].0;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(per_time.len());
    for (j, &t) in first.times.iter().enumerate() {
        if j > 0 {
            let dt = t - first.times[j - 1];
            integral += 0.5 * dt * (per_time[j].1 + per_time[j - 1].1);
        }
        let rhs = (r0 + (6.0 * l + 2.0 * m) * integral) * (rate * t).exp();
        // inf - finite stays inf; 0 * inf is avoided when the integral is zero
        let rhs = if rhs.is_nan() { r0 } else { rhs };
        out.push((t, rhs - per_time[j].0));
    }
    Ok(out)
}

/// Slack series as report rows.
pub fn stability_rows(slack: &[(f64, f64)]) -> Vec<InvariantRow> {
    slack
        .iter()
        .map(|&(t, s)| InvariantRow {
            t,
            name: "stability_slack".into(),
            value: s,
            bound: -STABILITY_TOL,
            pass: s >= -STABILITY_TOL,
        })
        .collect()
}

/// Support, speed, Lipschitz and residual rows for `checks`.
pub fn run_checks(traj: &Trajectory, checks: &[Check]) -> Result<Vec<InvariantRow>, SweepError> {
    let mut rows = Vec::new();
    if checks.contains(&Check::Support) {
        rows.extend(support_inclusion(traj)?);
    }
    if checks.contains(&Check::Speed) {
        rows.extend(speed_bound(traj));
        rows.extend(w2_lipschitz(traj)?);
    }
    rows.extend(residual_rows(traj, checks)?);
    Ok(rows)
}
