use super::{Bounds, ProxRegularSet};
use crate::Point;

/// Points of `set` inside `bounds`: a grid sample of the interior plus
/// boundary samples. About three quarters of the budget goes to the grid.
pub(crate) fn sample_points(set: &ProxRegularSet, samples: usize, bounds: &Bounds) -> Vec<Point> {
    let grid = bounds.grid(samples * 3 / 4);
    let mut pts: Vec<Point> = grid.into_iter().filter(|p| set.contains(p)).collect();
    pts.extend(set.boundary_samples((samples / 4).max(4), bounds));
    pts
}

/// `max_{a in A} dist(a, B)` over sample points of `A` in `bounds`.
pub fn directed_hausdorff(
    a: &ProxRegularSet,
    b: &ProxRegularSet,
    samples: usize,
    bounds: &Bounds,
) -> f64 {
    sample_points(a, samples, bounds)
        .iter()
        .map(|p| b.distance(p))
        .fold(0.0, f64::max)
}

/// Sampled Hausdorff distance between two sets restricted to `bounds`.
pub fn hausdorff(a: &ProxRegularSet, b: &ProxRegularSet, samples: usize, bounds: &Bounds) -> f64 {
    if a.shape == b.shape {
        return 0.0;
    }
    directed_hausdorff(a, b, samples, bounds).max(directed_hausdorff(b, a, samples, bounds))
}
