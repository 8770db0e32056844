//! Exact W2 between particle clouds, displacement interpolation, and the
//! projection of a cloud onto a set.

use crowdsweep::geometry::{ProxRegularSet, Shape};
use crowdsweep::transport::{geodesic, project_measure, w2, ParticleCloud};
use crowdsweep::Point;

fn main() -> anyhow::Result<()> {
    let a = ParticleCloud::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.0, 1.0),
    ])?;
    let b = ParticleCloud::new(vec![
        Point::new(3.0, 1.0),
        Point::new(2.0, 1.0),
        Point::new(2.0, 2.0),
    ])?;
    let (d, plan) = w2(&a, &b)?;
    println!("W2 = {d:.6}, matching {:?}", plan.permutation);

    // constant speed along the geodesic: W2(a, a_t) = t W2(a, b)
    for t in [0.25, 0.5, 0.75] {
        let mid = geodesic(&a, &b, &plan, t)?;
        println!("t = {t}: W2(a, a_t) = {:.6}", w2(&a, &mid)?.0);
    }

    // projection onto the outside of the unit ball moves each point radially
    let set = ProxRegularSet::new(
        Shape::BallComplement {
            center: Point::new(0.5, 0.5),
            radius: 1.0,
        },
        1.0,
    )?;
    let inside = ParticleCloud::new(vec![Point::new(0.5, 0.2), Point::new(0.9, 0.5), Point::new(0.4, 0.9)])?;
    let projected = project_measure(&inside, &set)?;
    println!("projected cloud: {:?}", projected.points());
    println!("W2 to the set: {:.6}", w2(&inside, &projected)?.0);
    Ok(())
}
