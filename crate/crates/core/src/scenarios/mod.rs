//! Bundled experiments, initial-measure sampling and obstacle search.
//!
//! A [`Scenario`] is a complete, serializable description of a run: field,
//! moving obstacles, an optional wall with an exit, the initial measure, the
//! time mesh and the region whose final mass is reported. Presets are stored
//! as TOML files under `scenarios/` and compiled into the library.

mod optimize;

pub use optimize::{optimize_obstacle, GridRow, GridStatus, ObstacleParams, OptimizeReport};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldKind, NonlocalField};
use crate::geometry::{Bounds, GeometryError, Motion, MovingPart, MovingSet, ProxRegularSet, Shape, MEMBERSHIP_TOL};
use crate::sweeper::{self, Integrator, ReachGuard, RunConfig, SweepError, Trajectory};
use crate::transport::ParticleCloud;
use crate::Point;

/// Rejection sampling gives up once this fraction of draws has been refused.
pub const MAX_REJECTION_RATE: f64 = 0.99;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("sampling starved: {rejected} of {drawn} draws fell outside C(0)")]
    SamplingStarved { drawn: usize, rejected: usize },
    #[error("no admissible grid point: every obstacle overlaps the initial cloud")]
    EmptyAdmissibleSet,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// Field section: a model and its declared constant `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub lipschitz: f64,
    pub model: FieldKind,
}

/// Straight wall `x1 = x` with an exit `|x2 - exit_center| < half_width`,
/// thickened by `thickness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub exit_center: f64,
    pub half_width: f64,
    pub thickness: f64,
}

impl WallSpec {
    pub fn shape(&self) -> Shape {
        Shape::WallWithExit {
            x: self.x,
            exit_center: self.exit_center,
            exit_half_width: self.half_width,
            thickness: self.thickness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian {
        mean: Point,
        /// Row-major 2x2 covariance.
        covariance: [[f64; 2]; 2],
    },
    Uniform {
        min: Point,
        max: Point,
        /// Jittered stratified grid instead of independent draws.
        #[serde(default)]
        stratified: bool,
    },
    Points {
        points: Vec<Point>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub tau: f64,
    pub horizon: f64,
    pub particles: usize,
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub guard: ReachGuard,
}

fn one() -> usize {
    1
}

/// Region whose mass is reported at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    /// Open half-plane `{x : normal . x > offset}`.
    HalfPlane { normal: Point, offset: f64 },
    Box { min: Point, max: Point },
}

impl Default for Region {
    /// `{x1 > 0}`.
    fn default() -> Self {
        Region::HalfPlane {
            normal: Point::new(1.0, 0.0),
            offset: 0.0,
        }
    }
}

impl Region {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Region::HalfPlane { normal, offset } => normal.dot(x) > *offset,
            Region::Box { min, max } => x.x >= min.x && x.x <= max.x && x.y >= min.y && x.y <= max.y,
        }
    }
}

/// Declared constants of the moving set and the box bounding all sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViabilitySpec {
    pub reach: f64,
    /// Hausdorff-Lipschitz constant `M` of `t -> C(t)`.
    pub speed: f64,
    pub workspace: Bounds,
    /// Intersect `C(t)` with the workspace box.
    #[serde(default)]
    pub clip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub field: FieldSpec,
    #[serde(default)]
    pub obstacle: Vec<MovingPart>,
    #[serde(default)]
    pub wall: Option<WallSpec>,
    pub initial: InitialSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub region: Region,
    pub viability: ViabilitySpec,
}

const PRESETS: &[(&str, &str)] = &[
    ("braess_none", include_str!("../../scenarios/braess_none.toml")),
    ("braess_stationary", include_str!("../../scenarios/braess_stationary.toml")),
    ("braess_moving", include_str!("../../scenarios/braess_moving.toml")),
    ("morse", include_str!("../../scenarios/morse.toml")),
    ("half_space", include_str!("../../scenarios/half_space.toml")),
    ("congestion", include_str!("../../scenarios/congestion.toml")),
    ("rotating_ellipse", include_str!("../../scenarios/rotating_ellipse.toml")),
];

/// Names of the bundled presets.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// TOML text of a bundled preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

impl Scenario {
    /// Parses a bundled preset.
    pub fn preset(name: &str) -> Result<Scenario, ScenarioError> {
        let src = preset_source(name).ok_or_else(|| ScenarioError::UnknownPreset(name.into()))?;
        toml::from_str(src).map_err(|e| ScenarioError::Invalid(format!("preset {name}: {e}")))
    }

    pub fn field(&self) -> NonlocalField {
        NonlocalField::new(self.field.model.clone(), self.field.lipschitz)
    }

    /// Obstacles followed by the static parts (wall, workspace clip).
    pub fn parts(&self) -> Vec<MovingPart> {
        let mut parts = self.obstacle.clone();
        if let Some(w) = &self.wall {
            parts.push(MovingPart {
                shape: w.shape(),
                motion: Motion::Static,
            });
        }
        if self.viability.clip {
            parts.push(MovingPart {
                shape: Shape::Box {
                    min: self.viability.workspace.min,
                    max: self.viability.workspace.max,
                },
                motion: Motion::Static,
            });
        }
        parts
    }

    pub fn moving_set(&self) -> Result<MovingSet, ScenarioError> {
        let parts = self.parts();
        if parts.is_empty() {
            return Err(ScenarioError::Invalid(
                "no obstacle, wall or clip box: the viability region is the whole plane".into(),
            ));
        }
        Ok(MovingSet::new(
            parts,
            self.viability.reach,
            self.run.horizon,
            self.viability.speed,
        )?)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            tau: self.run.tau,
            horizon: self.run.horizon,
            substeps: self.run.substeps,
            integrator: self.run.integrator,
            guard: self.run.guard,
        }
    }

    /// Samples the initial cloud with the scenario seed.
    pub fn initial_cloud(&self) -> Result<ParticleCloud, ScenarioError> {
        let c0 = self.moving_set()?.eval(0.0)?;
        sample_initial(&self.initial, self.run.particles, self.seed, &c0)
    }

    /// Samples the initial cloud and runs the catching-up scheme.
    pub fn simulate(&self) -> Result<Trajectory, ScenarioError> {
        let initial = self.initial_cloud()?;
        Ok(sweeper::run(&initial, &self.field(), &self.moving_set()?, &self.run_config())?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.run.tau = tau;
        self
    }
}

fn draw(spec: &InitialSpec, rng: &mut ChaCha8Rng, chol: &Matrix2<f64>) -> Point {
    match spec {
        InitialSpec::Gaussian { mean, .. } => {
            let z = Point::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            mean + chol * z
        }
        InitialSpec::Uniform { min, max, .. } => Point::new(
            rng.random_range(min.x..=max.x),
            rng.random_range(min.y..=max.y),
        ),
        InitialSpec::Points { .. } => unreachable!("point lists are not drawn"),
    }
}

/// Cells of a jittered grid: `rows x cols >= n` cells in row-major order,
/// close to square in the aspect ratio of the box.
fn strata(min: &Point, max: &Point, n: usize) -> (usize, usize) {
    let (w, h) = (max.x - min.x, max.y - min.y);
    let cols = ((n as f64 * w / h).sqrt().round() as usize).max(1);
    let rows = n.div_ceil(cols);
    (rows, cols)
}

/// Draws `n` particles from `spec`, keeping only those inside `c0`.
///
/// The generator is ChaCha8 seeded with the 64-bit `seed`. Gaussian draws use
/// the Cholesky factor of the covariance applied to standard normals.
/// Stratified uniform draws put one jittered point in each cell of a grid
/// covering the box (cells visited in a seed-shuffled order when the grid has
/// more cells than `n`). Rejected draws are replaced until the rejection rate
/// exceeds [`MAX_REJECTION_RATE`].
pub fn sample_initial(
    spec: &InitialSpec,
    n: usize,
    seed: u64,
    c0: &ProxRegularSet,
) -> Result<ParticleCloud, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::Invalid("particle count must be at least 1".into()));
    }
    let inside = |p: &Point| c0.signed_distance(p) <= MEMBERSHIP_TOL;
    if let InitialSpec::Points { points } = spec {
        if let Some(p) = points.iter().find(|p| !inside(p)) {
            return Err(ScenarioError::Invalid(format!(
                "listed point ({}, {}) lies outside C(0)",
                p.x, p.y
            )));
        }
        return ParticleCloud::new(points.clone()).map_err(|e| ScenarioError::Invalid(e.to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chol = match spec {
        InitialSpec::Gaussian { covariance: c, .. } => Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1])
            .cholesky()
            .ok_or_else(|| ScenarioError::Invalid("covariance is not positive definite".into()))?
            .l(),
        _ => Matrix2::identity(),
    };
    let mut points = Vec::with_capacity(n);
    let (mut drawn, mut rejected) = (0usize, 0usize);
    let mut accept = |p: Point, points: &mut Vec<Point>| -> Result<(), ScenarioError> {
        drawn += 1;
        if inside(&p) {
            points.push(p);
        } else {
            rejected += 1;
            if drawn >= 100 && rejected as f64 > MAX_REJECTION_RATE * drawn as f64 {
                return Err(ScenarioError::SamplingStarved { drawn, rejected });
            }
        }
        Ok(())
    };

    if let InitialSpec::Uniform {
        min,
        max,
        stratified: true,
    } = spec
    {
        let (rows, cols) = strata(min, max, n);
        let mut cells: Vec<usize> = (0..rows * cols).collect();
        // partial Fisher-Yates: the first n cells form a uniform subset
        for i in 0..n.min(cells.len()) {
            let j = rng.random_range(i..cells.len());
            cells.swap(i, j);
        }
        let (cw, ch) = ((max.x - min.x) / cols as f64, (max.y - min.y) / rows as f64);
        for &cell in &cells[..n] {
            let (r, c) = (cell / cols, cell % cols);
            let p = Point::new(
                min.x + (c as f64 + rng.random::<f64>()) * cw,
                min.y + (r as f64 + rng.random::<f64>()) * ch,
            );
            accept(p, &mut points)?;
        }
    }
    while points.len() < n {
        let p = draw(spec, &mut rng, &chol);
        accept(p, &mut points)?;
    }
    ParticleCloud::new(points).map_err(|e| ScenarioError::Invalid(e.to_string()))
}

/// Fraction of particles inside `region`.
pub fn mass_in_region(cloud: &ParticleCloud, region: &Region) -> f64 {
    let inside = cloud.points().iter().filter(|p| region.contains(p)).count();
    inside as f64 / cloud.len() as f64
}

/// Final mass in D for the three obstacle configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BraessResult {
    pub seed: u64,
    pub none: f64,
    pub stationary: f64,
    pub moving: f64,
}

impl BraessResult {
    /// `none > stationary > moving`.
    pub fn ordered(&self) -> bool {
        self.none > self.stationary && self.stationary > self.moving
    }
}

/// The three obstacle presets of the exit experiment.
pub const BRAESS_PRESETS: [&str; 3] = ["braess_none", "braess_stationary", "braess_moving"];

/// Runs the three exit presets with `seed` and reports the final mass in D.
pub fn braess_suite(seed: u64) -> Result<BraessResult, ScenarioError> {
    let masses = BRAESS_PRESETS
        .par_iter()
        .map(|name| {
            let s = Scenario::preset(name)?.with_seed(seed);
            let traj = s.simulate()?;
            Ok(mass_in_region(traj.final_cloud(), &s.region))
        })
        .collect::<Result<Vec<f64>, ScenarioError>>()?;
    Ok(BraessResult {
        seed,
        none: masses[0],
        stationary: masses[1],
        moving: masses[2],
    })
}

/// Reach of an ellipse with semi-axes `a`: the smallest radius of curvature.
pub fn ellipse_reach(a: &Point) -> f64 {
    let (lo, hi) = (a.x.min(a.y), a.x.max(a.y));
    lo * lo / hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> ProxRegularSet {
        ProxRegularSet::new(Shape::half_space(Point::new(1.0, 0.0), 1e6), f64::INFINITY).unwrap()
    }

    #[test]
    fn all_presets_parse_and_round_trip() {
        for name in preset_names() {
            let s = Scenario::preset(name).unwrap();
            assert_eq!(s.name, name);
            let text = toml::to_string(&s).unwrap();
            let back: Scenario = toml::from_str(&text).unwrap();
            assert_eq!(back, s, "{name}");
        }
    }

    #[test]
    fn point_list_is_used_verbatim() {
        let pts = vec![Point::new(1.0, 2.0), Point::new(-3.0, 0.5)];
        let c = sample_initial(&InitialSpec::Points { points: pts.clone() }, 2, 0, &plane()).unwrap();
        assert_eq!(c.points(), &pts[..]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = InitialSpec::Uniform {
            min: Point::new(2.0, -4.0),
            max: Point::new(6.0, 4.0),
            stratified: true,
        };
        let a = sample_initial(&spec, 300, 5, &plane()).unwrap();
        let b = sample_initial(&spec, 300, 5, &plane()).unwrap();
        let c = sample_initial(&spec, 300, 6, &plane()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stratified_sampling_fills_cells() {
        let (min, max) = (Point::new(2.0, -4.0), Point::new(6.0, 4.0));
        let spec = InitialSpec::Uniform { min, max, stratified: true };
        let c = sample_initial(&spec, 32, 1, &plane()).unwrap();
        // 4 x 8 unit cells: exactly one point each
        let mut seen = [0usize; 32];
        for p in c.points() {
            let (i, j) = ((p.x - 2.0).floor() as usize, (p.y + 4.0).floor() as usize);
            seen[j * 4 + i] += 1;
        }
        assert!(seen.iter().all(|&k| k == 1), "{seen:?}");
    }

    #[test]
    fn rejection_keeps_particles_inside() {
        let set = ProxRegularSet::new(Shape::half_space(Point::new(1.0, 0.0), 4.0), f64::INFINITY).unwrap();
        let spec = InitialSpec::Gaussian {
            mean: Point::new(4.0, 0.0),
            covariance: [[1.0, 0.0], [0.0, 1.0]],
        };
        let c = sample_initial(&spec, 200, 3, &set).unwrap();
        assert!(c.points().iter().all(|p| p.x <= 4.0));
    }

    #[test]
    fn starvation_is_reported() {
        let set = ProxRegularSet::new(Shape::half_space(Point::new(1.0, 0.0), -10.0), f64::INFINITY).unwrap();
        let spec = InitialSpec::Uniform {
            min: Point::new(0.0, 0.0),
            max: Point::new(1.0, 1.0),
            stratified: false,
        };
        assert!(matches!(
            sample_initial(&spec, 10, 0, &set),
            Err(ScenarioError::SamplingStarved { .. })
        ));
    }

    #[test]
    fn mass_counts() {
        let pts: Vec<Point> = (0..10).map(|i| Point::new(i as f64 - 6.5, 0.0)).collect();
        let c = ParticleCloud::new(pts).unwrap();
        assert_eq!(mass_in_region(&c, &Region::default()), 0.3);
        let all = ParticleCloud::new(vec![Point::new(1.0, 0.0); 4]).unwrap();
        assert_eq!(mass_in_region(&all, &Region::default()), 1.0);
        let none = ParticleCloud::new(vec![Point::new(-1.0, 0.0); 4]).unwrap();
        assert_eq!(mass_in_region(&none, &Region::default()), 0.0);
        // the boundary line itself is not in the open half-plane
        let on = ParticleCloud::new(vec![Point::new(0.0, 3.0)]).unwrap();
        assert_eq!(mass_in_region(&on, &Region::default()), 0.0);
    }

    #[test]
    fn braess_moving_preset_matches_parameters() {
        let s = Scenario::preset("braess_moving").unwrap();
        let w = s.wall.as_ref().unwrap();
        assert_eq!((w.x, w.half_width, w.thickness), (0.0, 0.6, 0.1));
        assert_eq!((s.run.tau, s.run.horizon, s.run.particles), (0.01, 20.0, 300));
        let FieldKind::Congestion(p) = &s.field.model else { panic!() };
        assert_eq!((p.epsilon, p.kappa, p.beta), (0.3, 1000.0, 0.466));
        let part = &s.obstacle[0];
        let Shape::EllipseComplement { center, semi_axes, .. } = &part.shape else { panic!() };
        assert_eq!((*center, *semi_axes), (Point::new(1.1, 0.0), Point::new(0.9, 0.1)));
        assert!(matches!(part.motion, Motion::Rotation { omega, .. } if omega == 1.0));
        assert_eq!(
            s.initial,
            InitialSpec::Uniform {
                min: Point::new(2.0, -4.0),
                max: Point::new(6.0, 4.0),
                stratified: false
            }
        );
    }
}
