//! Nearest points, normals and reach of the shapes used for obstacles.

use crowdsweep::geometry::{check_reach, hausdorff, Bounds, ProxRegularSet, Shape};
use crowdsweep::Point;

fn main() -> anyhow::Result<()> {
    let ellipse = Shape::EllipseComplement {
        center: Point::new(0.0, 0.0),
        semi_axes: Point::new(2.0, 1.0),
        angle: 0.3,
    };
    // the smallest radius of curvature of this ellipse is b^2 / a = 0.5
    let set = ProxRegularSet::new(ellipse.clone(), 0.45)?;
    let q = Point::new(1.6, 0.6);
    let p = set.project(&q)?;
    println!("P({q:?}) = {p:?}, distance {:.6}", set.distance(&q));
    println!("outward normal there: {:?}", set.outward_normal(&p)?);
    // deep inside the obstacle the foot is no longer guaranteed unique
    if let Err(e) = set.project(&Point::new(0.1, 0.0)) {
        println!("refused: {e}");
    }

    let bounds = Bounds::new(Point::new(-4.0, -4.0), Point::new(4.0, 4.0));
    println!("reach 0.45 passes the r-ball test: {}", check_reach(&set, &bounds, 2000).is_ok());
    let too_big = ProxRegularSet::new(ellipse.clone(), 0.8)?;
    println!("reach 0.80 passes the r-ball test: {}", check_reach(&too_big, &bounds, 2000).is_ok());

    let wall = ProxRegularSet::new(
        Shape::WallWithExit {
            x: 0.0,
            exit_center: 0.0,
            exit_half_width: 0.6,
            thickness: 0.1,
        },
        0.1,
    )?;
    for q in [Point::new(0.05, 2.0), Point::new(0.02, 0.58), Point::new(-0.03, 0.0)] {
        println!("wall: P({q:?}) = {:?}", wall.project(&q)?);
    }

    let moved = ProxRegularSet::new(ellipse.moved(Point::new(0.5, 0.0), 0.0, Point::zeros())?, 0.45)?;
    println!("Hausdorff distance after a 0.5 shift: {:.4}", hausdorff(&set, &moved, 4096, &bounds));
    Ok(())
}
