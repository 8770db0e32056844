use super::hausdorff::sample_points;
use super::{Bounds, GeometryError, ProxRegularSet};

/// Sampled r-ball test: for boundary points `x` with outward unit normal `v`
/// and set points `y`, require `<v, y - x> <= |x - y|^2 / (2r)`.
pub fn check_reach(set: &ProxRegularSet, bounds: &Bounds, samples: usize) -> Result<(), GeometryError> {
    let r = set.reach;
    let boundary = set.boundary_samples(samples / 4, bounds);
    let points = sample_points(set, samples, bounds);
    for x in &boundary {
        let Ok(v) = set.boundary_normal(x) else {
            continue;
        };
        for y in &points {
            let d = y - x;
            let lhs = v.dot(&d);
            let rhs = d.norm_squared() / (2.0 * r) + 1e-9;
            if lhs > rhs {
                return Err(GeometryError::ReachTestFailed {
                    boundary: *x,
                    witness: *y,
                    lhs,
                    rhs,
                });
            }
        }
    }
    Ok(())
}
