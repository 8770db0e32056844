//! File formats and command implementations behind the `crowdsweep` binary.
//!
//! Scenarios are TOML files (or names of bundled presets). A run writes
//!
//! * `manifest.json`, created before the run starts and finalized after it;
//! * `trajectory.csv` with columns `t, particle_id, x1, x2, v1, v2`, where the
//!   velocity is the one recorded on `[t, t + tau]` and is empty at the final
//!   time;
//! * `diagnostics.csv` with columns `t, invariant_name, value, bound, pass`;
//! * optionally `frames/frame_XXXXX.svg`.
//!
//! Floats are written with 17 significant digits so that files round-trip
//! exactly.

mod svg;

pub use svg::render_frame;

use std::fs;
use std::io::{self, Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{probe_constants, FieldError};
use crate::geometry::{check_reach, hausdorff, GeometryError, Motion};
use crate::scenarios::{
    braess_suite, optimize_obstacle, BraessResult, GridStatus, ObstacleParams, OptimizeReport, Scenario, ScenarioError,
};
use crate::sweeper::diagnostics::{self, Check, InvariantRow};
use crate::sweeper::{self, Integrator, ReachGuard, SweepError, Trajectory};
use crate::transport::{w2, ParticleCloud};
use crate::Point;

/// Samples used by the declared-constant checks of [`validate`].
pub const REACH_SAMPLES: usize = 2000;
pub const PROBE_SAMPLES: usize = 2000;
pub const SPEED_SAMPLES: usize = 1024;
/// Times at which the declared `M` is checked.
const SPEED_CHECK_TIMES: usize = 8;
/// Obstacle shift of the comparison run used by the stability check.
pub const STABILITY_SHIFT: Point = Point::new(0.05, 0.0);

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation failed ({check}): {detail}")]
    Validation { check: &'static str, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

impl CliError {
    fn validation(check: &'static str, detail: impl std::fmt::Display) -> Self {
        CliError::Validation {
            check,
            detail: detail.to_string(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Parses scenario text; `origin` names the source in error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        CliError::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

pub fn serialize_scenario(s: &Scenario) -> String {
    toml::to_string(s).expect("scenarios always serialize")
}

/// Reads a scenario file, or a bundled preset when `spec` names one and no
/// such file exists.
pub fn read_scenario(spec: &str) -> Result<Scenario, CliError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(src) = crate::scenarios::preset_source(spec) {
            return parse_scenario(src, spec);
        }
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_scenario(&text, spec)
}

/// [`read_scenario`] followed by [`validate`].
pub fn load_scenario(spec: &str) -> Result<Scenario, CliError> {
    let s = read_scenario(spec)?;
    validate(&s)?;
    Ok(s)
}

/// Checks the declared constants of a scenario.
///
/// * `mesh`: the horizon is an even multiple of `tau`.
/// * `reach`: the sampled r-ball test on `C(t)` at a few times.
/// * `field-probe`: the field's empirical bound and Lipschitz constants do
///   not exceed the declared `L` on the workspace.
/// * `speed`: sampled `H(C(t), C(t + tau)) <= M tau`.
/// * `tau-feasibility`: `2 tau (L + M) < r` (declared reach guard only).
pub fn validate(s: &Scenario) -> Result<(), CliError> {
    s.run_config()
        .cycles()
        .map_err(|e| CliError::validation("mesh", e))?;
    if s.run.particles == 0 {
        return Err(CliError::validation("particles", "particle count is 0"));
    }
    let ms = s.moving_set().map_err(|e| CliError::validation("moving-set", e))?;
    let ws = &s.viability.workspace;
    let horizon = s.run.horizon;

    for k in 0..=2 {
        let t = horizon * k as f64 / 2.0;
        let set = ms.eval(t).map_err(|e| CliError::validation("moving-set", e))?;
        if let Err(e) = check_reach(&set, ws, REACH_SAMPLES) {
            let detail = match e {
                GeometryError::ReachTestFailed { boundary, witness, lhs, rhs } => format!(
                    "declared reach {} fails at t = {t} between boundary point ({}, {}) and ({}, {}): {lhs} > {rhs}",
                    s.viability.reach, boundary.x, boundary.y, witness.x, witness.y
                ),
                other => other.to_string(),
            };
            return Err(CliError::validation("reach", detail));
        }
    }

    probe_constants(&s.field(), ws, PROBE_SAMPLES, s.seed).map_err(|e| match e {
        FieldError::DeclaredBoundViolated { .. } => CliError::validation("field-probe", e),
        other => CliError::validation("field", other),
    })?;

    if !ms.is_static() {
        let tau = s.run.tau;
        for k in 0..SPEED_CHECK_TIMES {
            let t = (horizon - tau) * k as f64 / (SPEED_CHECK_TIMES - 1) as f64;
            let (a, b) = (
                ms.eval(t).map_err(|e| CliError::validation("speed", e))?,
                ms.eval(t + tau).map_err(|e| CliError::validation("speed", e))?,
            );
            let h = hausdorff(&a, &b, SPEED_SAMPLES, ws);
            if h > s.viability.speed * tau * (1.0 + 1e-6) + 1e-9 {
                return Err(CliError::validation(
                    "speed",
                    format!("H(C({t}), C({})) = {h} exceeds M tau = {}", t + tau, s.viability.speed * tau),
                ));
            }
        }
    }

    if s.run.guard == ReachGuard::Declared {
        let depth = 2.0 * s.run.tau * (s.field.lipschitz + s.viability.speed);
        if !(depth < s.viability.reach) {
            return Err(CliError::validation(
                "tau-feasibility",
                format!(
                    "2 tau (L + M) = {depth} is not below the reach {} (tau = {})",
                    s.viability.reach, s.run.tau
                ),
            ));
        }
    }
    Ok(())
}

/// Command-line overrides of a scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    pub tau: Option<f64>,
    pub particles: Option<usize>,
    pub seed: Option<u64>,
    pub substeps: Option<usize>,
    pub integrator: Option<Integrator>,
    /// Write an SVG frame every this many mesh steps; 0 disables frames.
    #[serde(default)]
    pub frames_every: usize,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl RunFlags {
    pub fn apply(&self, mut s: Scenario) -> Scenario {
        if let Some(tau) = self.tau {
            s.run.tau = tau;
        }
        if let Some(n) = self.particles {
            s.run.particles = n;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(k) = self.substeps {
            s.run.substeps = k;
        }
        if let Some(i) = self.integrator {
            s.run.integrator = i;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Everything needed to reproduce a run, together with timing information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_path: String,
    pub output_dir: PathBuf,
    pub flags: RunFlags,
    pub tool_version: String,
    /// The scenario after overrides and defaults.
    pub scenario: Scenario,
    pub finalized: bool,
    pub phases: Vec<Phase>,
    /// First failed invariant, if any.
    pub failed_invariant: Option<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifests always serialize");
        fs::write(path, text + "\n").map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<RunManifest, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `t, particle_id, x1, x2, v1, v2` rows for every mesh time.
pub fn write_trajectory_csv<W: io::Write>(traj: &Trajectory, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "particle_id", "x1", "x2", "v1", "v2"])?;
    for (j, (t, cloud)) in traj.times.iter().zip(&traj.clouds).enumerate() {
        let t = fmt_f64(*t);
        for (i, p) in cloud.points().iter().enumerate() {
            let (v1, v2) = match traj.velocities.get(j) {
                Some(v) => (fmt_f64(v[i].x), fmt_f64(v[i].y)),
                None => (String::new(), String::new()),
            };
            w.write_record([t.as_str(), &i.to_string(), &fmt_f64(p.x), &fmt_f64(p.y), &v1, &v2])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv<W: io::Write>(rows: &[InvariantRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "invariant_name", "value", "bound", "pass"])?;
    for r in rows {
        w.write_record([
            fmt_f64(r.t),
            r.name.clone(),
            fmt_f64(r.value),
            fmt_f64(r.bound),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CloudRow {
    t: Option<f64>,
    x1: f64,
    x2: f64,
}

/// Reads a cloud from a CSV with `x1, x2` columns. Trajectory dumps (with a
/// `t` column) yield the cloud at their last time.
pub fn read_cloud_csv<R: io::Read>(input: R, origin: &str) -> Result<ParticleCloud, CliError> {
    let csv_err = |message: String| CliError::Csv {
        path: origin.to_string(),
        message,
    };
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize::<CloudRow>() {
        rows.push(row.map_err(|e| csv_err(e.to_string()))?);
    }
    let last = rows.iter().filter_map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    let points: Vec<Point> = rows
        .iter()
        .filter(|r| r.t.is_none_or(|t| t == last))
        .map(|r| Point::new(r.x1, r.x2))
        .collect();
    ParticleCloud::new(points).map_err(|e| csv_err(e.to_string()))
}

pub fn read_cloud_file(path: &Path) -> Result<ParticleCloud, CliError> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    read_cloud_csv(text.as_bytes(), &path.display().to_string())
}

/// Outcome of [`run_command`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub rows: Vec<InvariantRow>,
}

impl RunOutcome {
    pub fn first_failure(&self) -> Option<&InvariantRow> {
        self.rows.iter().find(|r| !r.pass)
    }
}

fn timed<T>(phases: &mut Vec<Phase>, name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    phases.push(Phase {
        name: name.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    out
}

/// The scenario with every obstacle shifted by `shift`.
pub fn shifted_obstacles(s: &Scenario, shift: Point) -> Scenario {
    let mut out = s.clone();
    for part in &mut out.obstacle {
        if let Ok(moved) = part.shape.moved(shift, 0.0, Point::zeros()) {
            part.shape = moved;
        }
        if let Motion::Rotation { pivot, .. } = &mut part.motion {
            *pivot += shift;
        }
    }
    out
}

/// Loads, validates and runs a scenario, writing all artifacts to `out_dir`.
///
/// The returned outcome lists the diagnostics; a failed invariant is not an
/// error here (the artifacts are still written) but is reported through
/// [`RunOutcome::first_failure`].
pub fn run_command(scenario: &str, out_dir: &Path, flags: &RunFlags) -> Result<RunOutcome, CliError> {
    let mut phases = Vec::new();
    let s = timed(&mut phases, "load", || read_scenario(scenario))?;
    let s = flags.apply(s);
    timed(&mut phases, "validate", || validate(&s))?;

    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = RunManifest {
        scenario_path: scenario.to_string(),
        output_dir: out_dir.to_path_buf(),
        flags: flags.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: s.clone(),
        finalized: false,
        phases: phases.clone(),
        failed_invariant: None,
    };
    manifest.write(&manifest_path)?;

    let traj = match timed(&mut phases, "simulate", || s.simulate()) {
        Ok(t) => t,
        Err(ScenarioError::Sweep(SweepError::OutOfReach {
            cycle,
            particle,
            source,
            partial,
        })) => {
            // dump everything computed so far before reporting
            write_trajectory_file(&partial, &out_dir.join("trajectory.csv"))?;
            manifest.phases = phases;
            manifest.failed_invariant = Some(format!("projection in cycle {cycle}, particle {particle}: {source}"));
            manifest.finalized = true;
            manifest.write(&manifest_path)?;
            return Err(CliError::Sweep(SweepError::OutOfReach {
                cycle,
                particle,
                source,
                partial,
            }));
        }
        Err(e) => return Err(e.into()),
    };

    let mut rows = timed(&mut phases, "diagnostics", || diagnostics::run_checks(&traj, &flags.checks))?;
    if flags.checks.contains(&Check::Stability) {
        let other = shifted_obstacles(&s, STABILITY_SHIFT);
        let slack = timed(&mut phases, "stability", || -> Result<_, CliError> {
            // same particles as the base run, so only the obstacle differs
            let second = sweeper::run(&traj.clouds[0], &other.field(), &other.moving_set()?, &other.run_config())?;
            Ok(diagnostics::stability_gap(&traj, &second, &s.viability.workspace)?)
        })?;
        rows.extend(diagnostics::stability_rows(&slack));
    }

    timed(&mut phases, "write", || -> Result<(), CliError> {
        write_trajectory_file(&traj, &out_dir.join("trajectory.csv"))?;
        let path = out_dir.join("diagnostics.csv");
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        write_diagnostics_csv(&rows, io::BufWriter::new(file)).map_err(|e| CliError::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if flags.frames_every > 0 {
            write_frames(&traj, &s, &out_dir.join("frames"), flags.frames_every)?;
        }
        Ok(())
    })?;

    manifest.phases = phases;
    manifest.failed_invariant = rows.iter().find(|r| !r.pass).map(|r| format!("{} at t = {}", r.name, r.t));
    manifest.finalized = true;
    manifest.write(&manifest_path)?;
    Ok(RunOutcome { manifest, rows })
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_trajectory_csv(traj, io::BufWriter::new(file)).map_err(|e| CliError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes `frame_XXXXX.svg` for every `every`-th mesh time and the last one.
pub fn write_frames(traj: &Trajectory, s: &Scenario, dir: &Path, every: usize) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let last = traj.times.len() - 1;
    for j in (0..=last).filter(|j| j % every == 0 || *j == last) {
        let t = traj.times[j];
        let set = traj.moving_set.eval(t).map_err(|e| CliError::Sweep(e.into()))?;
        let svg = render_frame(&set.shape, &traj.clouds[j], t, &s.viability.workspace);
        let path = dir.join(format!("frame_{j:05}.svg"));
        fs::write(&path, svg).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Validates a scenario and reports the field-probe estimates.
pub fn check_command(scenario: &str, flags: &RunFlags) -> Result<String, CliError> {
    let s = flags.apply(read_scenario(scenario)?);
    validate(&s)?;
    let est = probe_constants(&s.field(), &s.viability.workspace, PROBE_SAMPLES, s.seed)
        .map_err(|e| CliError::validation("field-probe", e))?;
    Ok(format!(
        "{}: ok (L = {}, probed sup = {:.4}, lip_x = {:.4}, lip_w2 = {:.4}; M = {}, reach = {}, {} cycles)",
        s.name,
        s.field.lipschitz,
        est.sup_bound,
        est.lip_x,
        est.lip_w2,
        s.viability.speed,
        s.viability.reach,
        s.run_config().cycles()?,
    ))
}

/// Runs the exit experiments for `seeds` and returns one row per seed.
pub fn braess_command(seeds: impl IntoIterator<Item = u64>) -> Result<Vec<BraessResult>, CliError> {
    seeds.into_iter().map(|s| Ok(braess_suite(s)?)).collect()
}

pub fn write_braess_csv<W: io::Write>(rows: &[BraessResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "none", "stationary", "moving", "ordered"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            fmt_f64(r.none),
            fmt_f64(r.stationary),
            fmt_f64(r.moving),
            r.ordered().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a grid file: one `c1 c2 a1 a2 omega` line per grid point; blank
/// lines and lines starting with `#` are ignored.
pub fn parse_grid(text: &str, origin: &str) -> Result<Vec<ObstacleParams>, CliError> {
    let mut grid = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |column: usize, message: String| CliError::Parse {
            path: origin.to_string(),
            line: k + 1,
            column,
            message,
        };
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| err(1, format!("`{v}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let [c1, c2, a1, a2, omega] = values[..] else {
            return Err(err(1, format!("expected 5 numbers, found {}", values.len())));
        };
        grid.push(ObstacleParams {
            center: Point::new(c1, c2),
            semi_axes: Point::new(a1, a2),
            omega,
        });
    }
    Ok(grid)
}

pub fn optimize_command(scenario: &str, grid_path: &Path, flags: &RunFlags) -> Result<OptimizeReport, CliError> {
    let base = flags.apply(read_scenario(scenario)?);
    let text = fs::read_to_string(grid_path).map_err(io_err(grid_path))?;
    let grid = parse_grid(&text, &grid_path.display().to_string())?;
    Ok(optimize_obstacle(&base, &grid)?)
}

/// Writes the optimization table sorted by objective; rejected and failed
/// grid points come last with an empty objective.
pub fn write_optimize_csv<W: io::Write>(report: &OptimizeReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["c1", "c2", "a1", "a2", "omega", "objective", "runtime", "status"])?;
    for row in report.sorted() {
        let p = &row.params;
        w.write_record([
            p.center.x.to_string(),
            p.center.y.to_string(),
            p.semi_axes.x.to_string(),
            p.semi_axes.y.to_string(),
            p.omega.to_string(),
            row.objective.map(fmt_f64).unwrap_or_default(),
            format!("{:.3}", row.runtime_secs),
            match &row.status {
                GridStatus::Evaluated => "ok".to_string(),
                GridStatus::Overlaps => "overlaps initial cloud".to_string(),
                GridStatus::Failed(e) => format!("failed: {e}"),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Exact W2 distance between the clouds stored in two CSV files.
pub fn w2_command(a: &Path, b: &Path) -> Result<f64, CliError> {
    let (a, b) = (read_cloud_file(a)?, read_cloud_file(b)?);
    let (d, _) = w2(&a, &b).map_err(|e| CliError::Sweep(e.into()))?;
    Ok(d)
}

/// Writes `text` to `path`, or to standard output for `None`.
pub fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn io::Write) -> csv::Result<()>) -> Result<(), CliError> {
    let origin = path.map_or("<stdout>".to_string(), |p| p.display().to_string());
    let to_err = |e: csv::Error| CliError::Csv {
        path: origin.clone(),
        message: e.to_string(),
    };
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p).map_err(io_err(p))?);
            write(&mut f).map_err(to_err)?;
            f.flush().map_err(io_err(p))
        }
        None => write(&mut io::stdout().lock()).map_err(to_err),
    }
}
