//! Runtime checks on a rotating-ellipse run: support inclusion, speed and
//! W2-Lipschitz bounds, boundary residuals, and the stability estimate
//! against a run with a slightly displaced obstacle.

use crowdsweep::cli::shifted_obstacles;
use crowdsweep::scenarios::Scenario;
use crowdsweep::sweeper::diagnostics::{run_checks, stability_gap, Check};
use crowdsweep::sweeper::run;
use crowdsweep::Point;

fn main() -> anyhow::Result<()> {
    let scenario = Scenario::preset("rotating_ellipse")?;
    let traj = scenario.simulate()?;
    let rows = run_checks(&traj, &Check::ALL)?;
    for name in ["support_inclusion", "speed_bound", "w2_lipschitz_step", "normal_cone_residual", "noflux_residual"] {
        let mine: Vec<_> = rows.iter().filter(|r| r.name == name).collect();
        let worst = mine.iter().map(|r| r.value).fold(0.0, f64::max);
        let pass = mine.iter().all(|r| r.pass);
        println!("{name:22} rows {:4}  worst {worst:.3e}  pass {pass}", mine.len());
    }

    let other = shifted_obstacles(&scenario, Point::new(0.05, 0.02));
    let second = run(&traj.clouds[0], &other.field(), &other.moving_set()?, &other.run_config())?;
    let slack = stability_gap(&traj, &second, &scenario.viability.workspace)?;
    let min = slack.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    println!("stability slack: min {min:.3e} over {} mesh times", slack.len());
    Ok(())
}
