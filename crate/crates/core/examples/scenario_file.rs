//! Reads a scenario (file path or preset name), validates it, runs it and
//! writes the trajectory CSV to standard output.
//!
//! ```text
//! cargo run --release --example scenario_file -- half_space > traj.csv
//! ```

use crowdsweep::cli::{load_scenario, serialize_scenario, write_trajectory_csv};

fn main() -> anyhow::Result<()> {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "half_space".into());
    let scenario = load_scenario(&spec)?;
    eprintln!("{}", serialize_scenario(&scenario));
    let traj = scenario.simulate()?;
    write_trajectory_csv(&traj, std::io::stdout().lock())?;
    Ok(())
}
