//! Balanced kd-tree over 3D points.
//!
//! Queries break distance ties by ascending point index, so results are
//! identical to a full sort of `(squared distance, index)` pairs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::scalar::Scalar;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node<S> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: S, left: usize, right: usize },
}

/// Static spatial index. Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct KdTree<S> {
    points: Vec<Point3<S>>,
    order: Vec<usize>,
    nodes: Vec<Node<S>>,
}

/// `(squared distance, index)` with the lexicographic order used for ties.
#[derive(Debug, Clone, Copy)]
struct Candidate<S> {
    dist2: S,
    index: usize,
}

impl<S: Scalar> PartialEq for Candidate<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Candidate<S> {}

impl<S: Scalar> PartialOrd for Candidate<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Candidate<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .partial_cmp(&other.dist2)
            .unwrap_or(Ordering::Equal)
            .then(self.index.cmp(&other.index))
    }
}

impl<S: Scalar> KdTree<S> {
    pub fn new(points: &[Point3<S>]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<S>] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis]
                .partial_cmp(&points[b][axis])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let first = self.points[self.order[start]];
        let (lo, hi) = self.order[start..end]
            .iter()
            .fold((first, first), |(lo, hi), &i| {
                (lo.component_min(self.points[i]), hi.component_max(self.points[i]))
            });
        let e = hi - lo;
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Indices of the `k` nearest points, nearest first.
    pub fn knn(&self, query: Point3<S>, k: usize) -> Result<Vec<usize>> {
        Ok(self.knn_with_distances(query, k)?.into_iter().map(|(i, _)| i).collect())
    }

    /// `(index, squared distance)` of the `k` nearest points, nearest first.
    pub fn knn_with_distances(&self, query: Point3<S>, k: usize) -> Result<Vec<(usize, S)>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if k > self.len() {
            return Err(Error::TooFewPoints { k, len: self.len() });
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_recurse(0, query, k, &mut heap);
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.dist2))
            .collect())
    }

    fn knn_recurse(&self, node: usize, q: Point3<S>, k: usize, heap: &mut BinaryHeap<Candidate<S>>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let c = Candidate { dist2: self.points[index].distance_squared(q), index };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < S::zero() { (left, right) } else { (right, left) };
                self.knn_recurse(near, q, k, heap);
                let plane2 = diff * diff;
                if heap.len() < k || plane2 <= heap.peek().expect("heap is full").dist2 {
                    self.knn_recurse(far, q, k, heap);
                }
            }
        }
    }

    /// Nearest point as `(index, squared distance)`; `None` for an empty tree.
    pub fn nearest(&self, query: Point3<S>) -> Option<(usize, S)> {
        if self.is_empty() {
            return None;
        }
        let mut best = Candidate { dist2: S::infinity(), index: usize::MAX };
        self.nearest_recurse(0, query, &mut best);
        Some((best.index, best.dist2))
    }

    fn nearest_recurse(&self, node: usize, q: Point3<S>, best: &mut Candidate<S>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &index in &self.order[start..end] {
                    let c = Candidate { dist2: self.points[index].distance_squared(q), index };
                    if c < *best {
                        *best = c;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < S::zero() { (left, right) } else { (right, left) };
                self.nearest_recurse(near, q, best);
                if diff * diff <= best.dist2 {
                    self.nearest_recurse(far, q, best);
                }
            }
        }
    }

    /// Indices (ascending) of points whose Chebyshev distance to `center` is at most `half_extent`.
    pub fn within_box(&self, center: Point3<S>, half_extent: S) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.is_empty() {
            let lo = center - Point3::new(half_extent, half_extent, half_extent);
            let hi = center + Point3::new(half_extent, half_extent, half_extent);
            self.box_recurse(0, center, half_extent, lo, hi, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn box_recurse(
        &self,
        node: usize,
        center: Point3<S>,
        half: S,
        lo: Point3<S>,
        hi: Point3<S>,
        out: &mut Vec<usize>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end]
                        .iter()
                        .copied()
                        .filter(|&i| self.points[i].chebyshev_distance(center) <= half),
                );
            }
            Node::Split { axis, value, left, right } => {
                if lo[axis] <= value {
                    self.box_recurse(left, center, half, lo, hi, out);
                }
                if hi[axis] >= value {
                    self.box_recurse(right, center, half, lo, hi, out);
                }
            }
        }
    }

    /// Indices (ascending) of points within Euclidean distance `radius` of `center`.
    pub fn within_radius(&self, center: Point3<S>, radius: S) -> Vec<usize> {
        let r2 = radius * radius;
        self.within_box(center, radius)
            .into_iter()
            .filter(|&i| self.points[i].distance_squared(center) <= r2)
            .collect()
    }
}

/// Convenience wrapper: `k` nearest neighbours of `query` in `points`.
pub fn knn<S: Scalar>(points: &[Point3<S>], query: Point3<S>, k: usize) -> Result<Vec<usize>> {
    KdTree::new(points).knn(query, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()))
            .collect()
    }

    fn brute_knn(points: &[Point3<f64>], q: Point3<f64>, k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (p.distance_squared(q), i)).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.into_iter().take(k).map(|(_, i)| i).collect()
    }

    #[test]
    fn self_is_nearest() {
        let pts = random_points(50, 1);
        assert_eq!(knn(&pts, pts[7], 1).unwrap(), vec![7]);
    }

    #[test]
    fn collinear_pair() {
        let pts: Vec<_> = (0..4).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert_eq!(knn(&pts, Point3::new(1.4, 0.0, 0.0), 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn hundred_random_points_match_full_sort() {
        let pts = random_points(100, 2);
        let tree = KdTree::new(&pts);
        let q = Point3::new(0.3, 0.6, 0.2);
        assert_eq!(tree.knn(q, 10).unwrap(), brute_knn(&pts, q, 10));
    }

    #[test]
    fn ties_are_broken_by_index() {
        // Many duplicates straddle split planes.
        let mut pts = vec![Point3::new(1.0, 0.0, 0.0); 20];
        pts.extend(vec![Point3::new(-1.0, 0.0, 0.0); 20]);
        pts.push(Point3::new(0.0, 0.0, 0.0));
        let tree = KdTree::new(&pts);
        let got = tree.knn(Point3::new(0.0, 0.0, 0.0), 25).unwrap();
        assert_eq!(got, brute_knn(&pts, Point3::zero(), 25));
        assert_eq!(got[0], 40);
    }

    #[test]
    fn k_larger_than_cloud_fails() {
        let pts = random_points(5, 3);
        assert!(matches!(knn(&pts, pts[0], 6), Err(Error::TooFewPoints { k: 6, len: 5 })));
        assert!(knn(&pts, pts[0], 0).is_err());
    }

    #[test]
    fn nearest_matches_knn() {
        let pts = random_points(500, 4);
        let tree = KdTree::new(&pts);
        for q in random_points(50, 5) {
            assert_eq!(tree.nearest(q).unwrap().0, brute_knn(&pts, q, 1)[0]);
        }
    }

    #[test]
    fn box_query_matches_scan() {
        let pts = random_points(700, 6);
        let tree = KdTree::new(&pts);
        for q in random_points(20, 7) {
            let expected: Vec<usize> =
                (0..pts.len()).filter(|&i| pts[i].chebyshev_distance(q) <= 0.15).collect();
            assert_eq!(tree.within_box(q, 0.15), expected);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn knn_equals_brute_force(n in 1usize..10_000, seed in any::<u64>(), k in 1usize..20) {
                let pts = random_points(n, seed);
                let k = k.min(n);
                let q = random_points(1, seed ^ 0xABCD)[0];
                prop_assert_eq!(KdTree::new(&pts).knn(q, k).unwrap(), brute_knn(&pts, q, k));
            }

            #[test]
            fn knn_on_grid_with_ties(side in 2usize..8, k in 1usize..30) {
                let pts: Vec<_> = (0..side * side * side)
                    .map(|i| Point3::new((i % side) as f64, ((i / side) % side) as f64, (i / side / side) as f64))
                    .collect();
                let k = k.min(pts.len());
                let q = Point3::new(0.5 * side as f64, 1.0, 0.5);
                prop_assert_eq!(KdTree::new(&pts).knn(q, k).unwrap(), brute_knn(&pts, q, k));
            }
        }
    }
}
