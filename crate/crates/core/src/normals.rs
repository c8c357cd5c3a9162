//! Normal estimation from local neighbourhood covariance.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, UnitVector3};
use crate::kdtree::KdTree;
use crate::scalar::Scalar;

/// Ratio of the middle to the largest covariance eigenvalue below which a
/// neighbourhood counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Result of [`estimate_normals`].
#[derive(Debug, Clone)]
pub struct NormalEstimate<S> {
    pub cloud: PointCloud<S>,
    /// Points whose neighbourhood was degenerate and received the `+z` fallback.
    pub degenerate: Vec<usize>,
}

/// Unit normal of a neighbourhood, oriented away from its centroid as seen from `anchor`.
///
/// Returns `None` for rank-deficient neighbourhoods (collinear or coincident points).
pub fn neighbourhood_normal<S: Scalar>(anchor: Point3<S>, neighbours: &[Point3<S>]) -> Option<UnitVector3<S>> {
    if neighbours.len() < 3 {
        return None;
    }
    let n = neighbours.len() as f64;
    let mut centroid = [0.0f64; 3];
    for p in neighbours {
        for (c, v) in centroid.iter_mut().zip(p.to_array()) {
            *c += v.as_f64();
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n);
    let mut cov = Matrix3::<f64>::zeros();
    for p in neighbours {
        let d = [
            p.x.as_f64() - centroid[0],
            p.y.as_f64() - centroid[1],
            p.z.as_f64() - centroid[2],
        ];
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] += d[r] * d[c];
            }
        }
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (smallest, middle, largest) = (order[0], order[1], order[2]);
    let lmax = eig.eigenvalues[largest];
    if !lmax.is_finite() || lmax <= 0.0 || eig.eigenvalues[middle] <= RANK_TOLERANCE * lmax {
        return None;
    }
    let v = eig.eigenvectors.column(smallest);
    let mut normal = [v[0], v[1], v[2]];

    let away = [
        anchor.x.as_f64() - centroid[0],
        anchor.y.as_f64() - centroid[1],
        anchor.z.as_f64() - centroid[2],
    ];
    let dot: f64 = normal.iter().zip(away).map(|(a, b)| a * b).sum();
    let flip = if dot.abs() > 1e-12 * lmax.sqrt() {
        dot < 0.0
    } else {
        // Anchor lies in the fitted plane: orient by the dominant component.
        let dominant = (0..3)
            .max_by(|&a, &b| normal[a].abs().total_cmp(&normal[b].abs()).then(b.cmp(&a)))
            .expect("three components");
        normal[dominant] < 0.0
    };
    if flip {
        normal.iter_mut().for_each(|c| *c = -*c);
    }
    UnitVector3::new(Point3::new(S::lit(normal[0]), S::lit(normal[1]), S::lit(normal[2])))
}

/// Estimates a normal for every point from its `k` nearest neighbours (the point included).
///
/// The normal is the smallest-eigenvalue eigenvector of the neighbourhood covariance,
/// signed to point away from the neighbourhood centroid. Degenerate neighbourhoods get `+z`.
pub fn estimate_normals<S: Scalar>(cloud: &PointCloud<S>, k: usize) -> Result<NormalEstimate<S>> {
    if k < 3 {
        return Err(Error::InvalidArgument("normal estimation needs k >= 3".into()));
    }
    if cloud.len() < k {
        return Err(Error::TooFewPoints { k, len: cloud.len() });
    }
    let tree = KdTree::new(cloud.points());
    let estimates: Vec<Option<UnitVector3<S>>> = cloud
        .points()
        .par_iter()
        .map(|&p| {
            let idx = tree.knn(p, k).expect("k checked against cloud size");
            let neighbours: Vec<_> = idx.iter().map(|&i| cloud.points()[i]).collect();
            neighbourhood_normal(p, &neighbours)
        })
        .collect();

    let mut degenerate = Vec::new();
    let normals = estimates
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            n.unwrap_or_else(|| {
                degenerate.push(i);
                UnitVector3::z_axis()
            })
        })
        .collect();
    if !degenerate.is_empty() {
        log::warn!("{} points had a degenerate neighbourhood; normal set to +z", degenerate.len());
    }
    Ok(NormalEstimate {
        cloud: PointCloud::from_parts_unchecked(cloud.points().to_vec(), Some(normals)),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planar_patch_gives_z_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..300)
            .map(|_| Point3::new(rng.random::<f64>(), rng.random::<f64>(), 0.0))
            .collect();
        let est = estimate_normals(&PointCloud::new(pts).unwrap(), 10).unwrap();
        assert!(est.degenerate.is_empty());
        for n in est.cloud.normals().unwrap() {
            assert!((n.z.abs() - 1.0).abs() < 1e-9);
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<_> = (0..2000)
            .map(|_| loop {
                let v = Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0f64),
                );
                if let Some(u) = v.normalized() {
                    if v.norm() <= 1.0 {
                        break u;
                    }
                }
            })
            .collect();
        let est = estimate_normals(&PointCloud::new(pts.clone()).unwrap(), 16).unwrap();
        let cos10 = 10f64.to_radians().cos();
        for (p, n) in pts.iter().zip(est.cloud.normals().unwrap()) {
            assert!(n.dot(UnitVector3::new(*p).unwrap()) >= cos10);
        }
    }

    #[test]
    fn line_is_degenerate() {
        let pts: Vec<_> = (0..20).map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let est = estimate_normals(&PointCloud::new(pts).unwrap(), 5).unwrap();
        assert_eq!(est.degenerate.len(), 20);
        assert!(est.cloud.normals().unwrap().iter().all(|n| *n == UnitVector3::z_axis()));
    }

    #[test]
    fn k_bounds() {
        let pts: Vec<_> = (0..4).map(|i| Point3::new(i as f64, (i * i) as f64, 0.0)).collect();
        let cloud = PointCloud::new(pts).unwrap();
        assert!(estimate_normals(&cloud, 2).is_err());
        assert!(estimate_normals(&cloud, 5).is_err());
    }
}
