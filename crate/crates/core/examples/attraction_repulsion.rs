//! A Gaussian crowd with attraction/repulsion crossed by a translating
//! elliptic obstacle. Writes SVG frames to the directory given as the first
//! argument (default `frames_morse`).

use std::path::PathBuf;

use crowdsweep::cli::write_frames;
use crowdsweep::scenarios::Scenario;

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "frames_morse".into()));
    let scenario = Scenario::preset("morse")?;
    let traj = scenario.simulate()?;
    for j in (0..traj.times.len()).step_by(200) {
        let c = &traj.clouds[j];
        let mean = c.mean();
        println!("t = {:5.2}  mean = ({:+.3}, {:+.3})", traj.times[j], mean.x, mean.y);
    }
    write_frames(&traj, &scenario, &dir, 100)?;
    println!("frames written to {}", dir.display());
    Ok(())
}
