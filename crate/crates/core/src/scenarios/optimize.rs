//! Exhaustive search over rotating elliptic obstacles.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ellipse_reach, mass_in_region, sample_initial, Scenario, ScenarioError};
use crate::geometry::{Motion, MovingPart, ProxRegularSet, Shape, MEMBERSHIP_TOL};
use crate::sweeper;
use crate::Point;

/// An elliptic obstacle centred at `center`, rotating about it at `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleParams {
    pub center: Point,
    pub semi_axes: Point,
    pub omega: f64,
}

impl ObstacleParams {
    fn key(&self) -> [f64; 5] {
        [self.center.x, self.center.y, self.semi_axes.x, self.semi_axes.y, self.omega]
    }

    /// Lexicographic order on `(c1, c2, a1, a2, omega)`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.key()
            .iter()
            .zip(other.key().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }

    pub fn part(&self) -> MovingPart {
        MovingPart {
            shape: Shape::EllipseComplement {
                center: self.center,
                semi_axes: self.semi_axes,
                angle: 0.0,
            },
            motion: if self.omega == 0.0 {
                Motion::Static
            } else {
                Motion::Rotation {
                    pivot: self.center,
                    omega: self.omega,
                }
            },
        }
    }

    /// `base` with its obstacles replaced by this one. The declared speed
    /// becomes the tip speed `|omega| max(a)` and the declared reach is
    /// lowered to the ellipse's reach if needed.
    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        s.obstacle = vec![self.part()];
        s.viability.speed = self.omega.abs() * self.semi_axes.x.max(self.semi_axes.y);
        s.viability.reach = s.viability.reach.min(ellipse_reach(&self.semi_axes));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridStatus {
    Evaluated,
    /// The obstacle covers part of the initial cloud.
    Overlaps,
    /// The run aborted, typically on a projection beyond the reach.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: ObstacleParams,
    /// Final mass in the region; `None` unless the status is `Evaluated`.
    pub objective: Option<f64>,
    pub status: GridStatus,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    /// One row per grid point, in grid order.
    pub rows: Vec<GridRow>,
    /// Index into `rows` of the minimizer.
    pub best: usize,
}

impl OptimizeReport {
    pub fn best(&self) -> &GridRow {
        &self.rows[self.best]
    }

    /// Evaluated rows by increasing objective (ties broken lexicographically),
    /// followed by the rejected and failed ones.
    pub fn sorted(&self) -> Vec<&GridRow> {
        let mut rows: Vec<&GridRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| compare(a, b));
        rows
    }
}

fn compare(a: &GridRow, b: &GridRow) -> Ordering {
    match (a.objective, b.objective) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.params.lex_cmp(&b.params)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.params.lex_cmp(&b.params),
    }
}

/// Evaluates every grid point on `base` and returns the one with the least
/// final mass in the scenario region.
///
/// The initial cloud is sampled once, against the base scenario without
/// obstacles, so every candidate starts from the same particles. A grid point
/// is admissible when all of them lie in its `C(0)`. Runs that abort are kept
/// as failed rows rather than ending the search.
pub fn optimize_obstacle(base: &Scenario, grid: &[ObstacleParams]) -> Result<OptimizeReport, ScenarioError> {
    let mut bare = base.clone();
    bare.obstacle.clear();
    let c0 = if bare.parts().is_empty() {
        ProxRegularSet::new(Shape::half_space(Point::new(1.0, 0.0), f64::MAX), f64::INFINITY)?
    } else {
        bare.moving_set()?.eval(0.0)?
    };
    let initial = sample_initial(&base.initial, base.run.particles, base.seed, &c0)?;

    let rows = grid
        .par_iter()
        .map(|params| {
            let start = Instant::now();
            let s = params.apply(base);
            let ms = s.moving_set()?;
            let c0 = ms.eval(0.0)?;
            let row = |objective, status| GridRow {
                params: *params,
                objective,
                status,
                runtime_secs: start.elapsed().as_secs_f64(),
            };
            if initial.points().iter().any(|p| c0.signed_distance(p) > MEMBERSHIP_TOL) {
                return Ok(row(None, GridStatus::Overlaps));
            }
            Ok(match sweeper::run(&initial, &s.field(), &ms, &s.run_config()) {
                Ok(traj) => row(Some(mass_in_region(traj.final_cloud(), &s.region)), GridStatus::Evaluated),
                Err(e) => row(None, GridStatus::Failed(e.to_string())),
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let best = (0..rows.len())
        .filter(|&i| rows[i].objective.is_some())
        .min_by(|&i, &j| compare(&rows[i], &rows[j]))
        .ok_or(ScenarioError::EmptyAdmissibleSet)?;
    Ok(OptimizeReport { rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_base() -> Scenario {
        let mut s = Scenario::preset("braess_moving").unwrap();
        s.run.particles = 20;
        s.run.horizon = 0.4;
        s
    }

    fn params(c1: f64, omega: f64) -> ObstacleParams {
        ObstacleParams {
            center: Point::new(c1, 0.0),
            semi_axes: Point::new(0.9, 0.16),
            omega,
        }
    }

    #[test]
    fn single_admissible_point_is_returned() {
        let report = optimize_obstacle(&small_base(), &[params(1.1, 0.0)]).unwrap();
        assert_eq!(report.best, 0);
        assert!(report.best().objective.is_some());
    }

    #[test]
    fn overlapping_obstacles_are_rejected() {
        let base = small_base();
        // covers most of the initial box [2, 6] x [-4, 4]
        let blocking = ObstacleParams {
            center: Point::new(4.0, 0.0),
            semi_axes: Point::new(1.9, 3.9),
            omega: 0.0,
        };
        let err = optimize_obstacle(&base, &[blocking]).unwrap_err();
        assert!(matches!(err, ScenarioError::EmptyAdmissibleSet));
        let report = optimize_obstacle(&base, &[blocking, params(1.1, 1.0)]).unwrap();
        assert_eq!(report.rows[0].objective, None);
        assert_eq!(report.rows[0].status, GridStatus::Overlaps);
        assert_eq!(report.best, 1);
        assert_eq!(report.sorted().last().unwrap().params, blocking);
    }

    #[test]
    fn aborted_runs_are_reported_not_fatal() {
        // without a field the static ellipse passes the declared-reach check
        // and the rotating one (2 tau M > reach) does not
        let mut base = small_base();
        base.field = super::super::FieldSpec {
            lipschitz: 0.0,
            model: crate::fields::FieldKind::CustomDrift {
                drift: crate::fields::Drift::Zero,
            },
        };
        base.run.guard = crate::sweeper::ReachGuard::Declared;
        let rotating = ObstacleParams {
            center: Point::new(1.1, 0.0),
            semi_axes: Point::new(0.9, 0.1),
            omega: 1.0,
        };
        let report = optimize_obstacle(&base, &[rotating, params(1.1, 0.0)]).unwrap();
        assert!(matches!(report.rows[0].status, GridStatus::Failed(_)));
        assert_eq!(report.rows[1].status, GridStatus::Evaluated);
        assert_eq!(report.best, 1);
    }

    #[test]
    fn ties_break_lexicographically() {
        // far-away obstacles never interact with the crowd, so all tie
        let grid = [
            params(-6.0, 0.5),
            params(-6.0, 0.0),
            params(-7.0, 0.0),
        ];
        let report = optimize_obstacle(&small_base(), &grid).unwrap();
        let objs: Vec<_> = report.rows.iter().map(|r| r.objective.unwrap()).collect();
        assert!(objs.iter().all(|&o| o == objs[0]));
        assert_eq!(report.best, 2);
    }
}
