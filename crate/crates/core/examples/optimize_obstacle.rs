//! Grid search over rotating elliptic obstacles in front of the exit, on a
//! shortened version of the exit experiment.

use crowdsweep::scenarios::{optimize_obstacle, ObstacleParams, Scenario};
use crowdsweep::Point;

fn main() -> anyhow::Result<()> {
    let mut base = Scenario::preset("braess_moving")?;
    base.run.horizon = 6.0;
    let mut grid = Vec::new();
    for c1 in [0.9, 1.1, 1.3] {
        for omega in [0.0, 1.0, 2.0] {
            grid.push(ObstacleParams {
                center: Point::new(c1, 0.0),
                semi_axes: Point::new(0.7, 0.1),
                omega,
            });
        }
    }
    let report = optimize_obstacle(&base, &grid)?;
    println!("   c1   omega   mass in D");
    for row in report.sorted() {
        let obj = row.objective.map_or("rejected".to_string(), |o| format!("{o:.4}"));
        println!("{:5.2}  {:5.2}   {obj}", row.params.center.x, row.params.omega);
    }
    let best = report.best();
    println!("best: c = {:?}, omega = {}", best.params.center, best.params.omega);
    Ok(())
}
