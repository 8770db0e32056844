//! A single particle at rest pushed by a wall moving at constant speed.
//!
//! Without a field the particle only moves when the wall catches it, so its
//! position at even mesh times is exactly `x1 = -2 k tau M`.

use crowdsweep::fields::NonlocalField;
use crowdsweep::geometry::{Motion, MovingPart, MovingSet, Shape};
use crowdsweep::sweeper::{run, RunConfig};
use crowdsweep::transport::ParticleCloud;
use crowdsweep::Point;

fn main() -> anyhow::Result<()> {
    let (speed, tau, horizon) = (0.8, 0.01, 1.0);
    let wall = MovingPart {
        shape: Shape::half_space(Point::new(1.0, 0.0), 0.0),
        motion: Motion::Translation {
            velocity: Point::new(-speed, 0.0),
        },
    };
    let set = MovingSet::new(vec![wall], f64::INFINITY, horizon, speed)?;
    let start = ParticleCloud::new(vec![Point::new(0.0, 0.0)])?;
    let traj = run(&start, &NonlocalField::zero(), &set, &RunConfig::new(tau, horizon))?;

    let mut worst: f64 = 0.0;
    for (j, cloud) in traj.clouds.iter().enumerate().step_by(2) {
        let exact = -(j as f64) * tau * speed;
        worst = worst.max((cloud.points()[0].x - exact).abs());
    }
    for j in (0..traj.times.len()).step_by(20) {
        println!("t = {:.2}  x1 = {:+.6}", traj.times[j], traj.clouds[j].points()[0].x);
    }
    println!("max deviation from -2k tau M at even steps: {worst:.3e}");
    Ok(())
}
