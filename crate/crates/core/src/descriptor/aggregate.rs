use std::cmp::Ordering;

use crate::scalar::Scalar;

/// Clusters the depths that fall into one cell and keeps the surface closest to the plane.
///
/// Depths are visited by ascending absolute value (ties by position). The
/// first one seeds a running mean; each next depth joins while its gap to the
/// current mean is at most `threshold`, and the scan stops at the first gap
/// that is larger. Returns the cluster mean and the positions of its members
/// in visiting order. An empty input yields `(0, [])`.
pub fn aggregate_cell_depths<S: Scalar>(depths: &[S], threshold: S) -> (S, Vec<usize>) {
    let mut order: Vec<usize> = (0..depths.len()).collect();
    order.sort_by(|&a, &b| {
        depths[a]
            .abs()
            .partial_cmp(&depths[b].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let Some(&first) = order.first() else {
        return (S::zero(), Vec::new());
    };
    let mut sum = depths[first];
    let mut mean = sum;
    let mut members = vec![first];
    for &next in &order[1..] {
        if (depths[next] - mean).abs() > threshold {
            break;
        }
        members.push(next);
        sum += depths[next];
        mean = sum / S::from_count(members.len());
    }
    (mean, members)
}
