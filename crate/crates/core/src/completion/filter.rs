use std::collections::{BTreeMap, BTreeSet};

use super::PredictionRecord;
use crate::geometry::Point3;
use crate::scalar::Scalar;

/// The representative prediction of one voxel and the queries that support it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredPoint<S> {
    pub record: PredictionRecord<S>,
    /// Distinct `source_query` values of all records in the voxel, ascending.
    pub support: Vec<usize>,
}

fn voxel_key<S: Scalar>(p: Point3<S>, voxel_size: S) -> (i64, i64, i64) {
    let f = |c: S| (c / voxel_size).floor().to_i64().unwrap_or(if c > S::zero() { i64::MAX } else { i64::MIN });
    (f(p.x), f(p.y), f(p.z))
}

/// Inter-descriptor consistency filter.
///
/// Records are binned into voxels of edge `voxel_size`. Voxels supported by
/// fewer than `min_support` distinct source queries are dropped. Every other
/// voxel keeps the single record nearest to the centroid of its records, each
/// weighted by `exp(-depth^2 / (2 sigma^2))`. Ties go to the lower absolute
/// depth, then the lower source query, then input order. Output follows the
/// lexicographic voxel order.
pub fn filter_predictions<S: Scalar>(
    records: &[PredictionRecord<S>],
    voxel_size: S,
    min_support: usize,
    sigma: S,
) -> Vec<FilteredPoint<S>> {
    assert!(voxel_size > S::zero(), "voxel size must be positive");
    let mut voxels: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
    for (idx, r) in records.iter().enumerate() {
        voxels.entry(voxel_key(r.point, voxel_size)).or_default().push(idx);
    }
    let two_sigma_sq = S::lit(2.0) * sigma * sigma;
    let mut kept = Vec::new();
    for members in voxels.values() {
        let support: BTreeSet<usize> = members.iter().map(|&m| records[m].source_query).collect();
        if support.len() < min_support {
            continue;
        }
        let mut weighted = Point3::zero();
        let mut total = S::zero();
        for &m in members {
            let d = records[m].predicted_depth;
            let w = (-(d * d) / two_sigma_sq).exp();
            weighted += records[m].point * w;
            total += w;
        }
        let centroid = if total > S::zero() {
            weighted * (S::one() / total)
        } else {
            // Every weight underflowed: fall back to the plain mean.
            let sum = members.iter().fold(Point3::zero(), |acc, &m| acc + records[m].point);
            sum * (S::one() / S::from_count(members.len()))
        };
        let best = members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (ra, rb) = (&records[a], &records[b]);
                ra.point
                    .distance_squared(centroid)
                    .partial_cmp(&rb.point.distance_squared(centroid))
                    .expect("finite distances")
                    .then(ra.predicted_depth.abs().partial_cmp(&rb.predicted_depth.abs()).expect("finite depths"))
                    .then(ra.source_query.cmp(&rb.source_query))
                    .then(a.cmp(&b))
            })
            .expect("voxels are non-empty");
        kept.push(FilteredPoint { record: records[best], support: support.into_iter().collect() });
    }
    kept
}
