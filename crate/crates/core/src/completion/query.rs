use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point3, PointCloud};
use crate::scalar::Scalar;

/// Farthest-point sampling of `n` indices (all of them when `n >= points.len()`).
///
/// The first index is drawn with a ChaCha8 generator seeded by `seed`; every
/// following pick maximises the distance to the picks so far, ties going to the
/// lowest index.
pub fn farthest_point_indices<S: Scalar>(points: &[Point3<S>], n: usize, seed: u64) -> Vec<usize> {
    let len = points.len();
    let n = n.min(len);
    if n == 0 {
        return Vec::new();
    }
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..len);
    let mut picked = vec![false; len];
    let mut nearest = vec![S::infinity(); len];
    let mut order = Vec::with_capacity(n);
    let mut current = first;
    loop {
        picked[current] = true;
        order.push(current);
        if order.len() == n {
            return order;
        }
        let c = points[current];
        let mut best: Option<(usize, S)> = None;
        for (i, p) in points.iter().enumerate() {
            let d = p.distance_squared(c);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if !picked[i] && best.is_none_or(|(_, bd)| nearest[i] > bd) {
                best = Some((i, nearest[i]));
            }
        }
        current = best.expect("unpicked points remain").0;
    }
}

/// Query points for a level: `n` points of `cloud` chosen by farthest-point sampling.
pub fn select_query_points<S: Scalar>(cloud: &PointCloud<S>, n: usize, seed: u64) -> Vec<Point3<S>> {
    farthest_point_indices(cloud.points(), n, seed)
        .into_iter()
        .map(|i| cloud.points()[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point3<f64>> {
        xs.iter().map(|&x| Point3::new(x, 0.0, 0.0)).collect()
    }

    #[test]
    fn all_points_is_a_permutation() {
        let pts = line(&[0.0, 0.3, 0.1, 0.9, 0.5]);
        let mut idx = farthest_point_indices(&pts, 5, 3);
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert_eq!(farthest_point_indices(&pts, 50, 3).len(), 5);
    }

    #[test]
    fn segment_endpoints_follow_the_first_pick() {
        // Endpoints at 0 and 2, midpoint 1. From an endpoint the other endpoint is
        // farthest; from the midpoint both are at distance 1 and the lower index wins.
        let pts = line(&[0.0, 1.0, 2.0]);
        for seed in 0..32 {
            let idx = farthest_point_indices(&pts, 2, seed);
            let expected_second = match idx[0] {
                0 => 2,
                2 => 0,
                _ => 0,
            };
            assert_eq!(idx[1], expected_second);
        }
    }

    #[test]
    fn seeded_selection_is_reproducible() {
        let pts: Vec<_> = (0..200).map(|i| Point3::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos(), 0.0)).collect();
        assert_eq!(farthest_point_indices(&pts, 10, 42), farthest_point_indices(&pts, 10, 42));
    }

    #[test]
    fn duplicates_are_never_picked_twice() {
        let pts = line(&[1.0, 1.0, 1.0]);
        let mut idx = farthest_point_indices(&pts, 3, 0);
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2]);
    }
}
