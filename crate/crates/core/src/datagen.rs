//! Synthetic incomplete/complete pairs: cut holes and build the level hierarchy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::kdtree::KdTree;
use crate::scalar::Scalar;

/// Where and how large a hole to cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleSpec {
    /// Fraction of the points to remove, in `(0, 1)`.
    pub fraction: f64,
    /// Hole centre; drawn with `seed` when absent.
    pub center_index: Option<usize>,
    pub seed: u64,
}

impl HoleSpec {
    pub fn new(fraction: f64, seed: u64) -> Self {
        Self { fraction, center_index: None, seed }
    }
}

/// A cloud split into the part that is kept and the part cut out.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleSplit<S> {
    pub incomplete: PointCloud<S>,
    pub missing: PointCloud<S>,
    pub center_index: usize,
    /// Indices (ascending, into the input cloud) of the removed points.
    pub missing_indices: Vec<usize>,
}

/// Removes the `round(fraction * n)` points nearest to a hole centre, the centre included.
///
/// Both outputs keep the input order.
pub fn synthesize_hole<S: Scalar>(cloud: &PointCloud<S>, spec: &HoleSpec) -> Result<HoleSplit<S>> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(spec.fraction > 0.0 && spec.fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("hole fraction must lie in (0, 1), got {}", spec.fraction)));
    }
    let count = (spec.fraction * n as f64).round() as usize;
    if count == 0 || count >= n {
        return Err(Error::InvalidArgument(format!(
            "hole fraction {} removes {count} of {n} points; at least one point must be removed and one kept",
            spec.fraction
        )));
    }
    let center_index = match spec.center_index {
        Some(c) if c >= n => {
            return Err(Error::InvalidArgument(format!("hole centre {c} outside a cloud of {n} points")))
        }
        Some(c) => c,
        None => ChaCha8Rng::seed_from_u64(spec.seed).random_range(0..n),
    };
    let tree = KdTree::new(cloud.points());
    let mut missing_indices = tree.knn(cloud.points()[center_index], count)?;
    missing_indices.sort_unstable();
    let mut removed = vec![false; n];
    for &i in &missing_indices {
        removed[i] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
    Ok(HoleSplit {
        incomplete: cloud.select(&kept),
        missing: cloud.select(&missing_indices),
        center_index,
        missing_indices,
    })
}

/// Cuts several holes one after the other; each fraction applies to what is left.
///
/// Returns the final incomplete cloud and all removed points (in removal order).
pub fn synthesize_holes<S: Scalar>(cloud: &PointCloud<S>, specs: &[HoleSpec]) -> Result<(PointCloud<S>, PointCloud<S>)> {
    let Some((first, rest)) = specs.split_first() else {
        return Err(Error::InvalidArgument("no hole specified".into()));
    };
    let split = synthesize_hole(cloud, first)?;
    let (mut incomplete, mut missing) = (split.incomplete, split.missing);
    for spec in rest {
        let next = synthesize_hole(&incomplete, spec)?;
        let (pts, ns) = next.missing.into_parts();
        missing.extend(&pts, ns.as_deref())?;
        incomplete = next.incomplete;
    }
    Ok((incomplete, missing))
}

/// One level of the data hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelData<S> {
    pub level_id: usize,
    pub incomplete: PointCloud<S>,
    pub missing: PointCloud<S>,
    /// `incomplete` followed by `missing`.
    pub complete: PointCloud<S>,
}

/// Builds coarse-to-fine data levels from the finest incomplete/missing pair.
///
/// `ratios` go from coarse to fine, strictly increase, lie in `(0, 1]` and end
/// at 1. The incomplete and missing parts are subsampled independently, each
/// with one seeded permutation, so every coarser level is a subset of the next
/// finer one. Subsets keep the input order.
pub fn build_level_hierarchy<S: Scalar>(
    incomplete: &PointCloud<S>,
    missing: &PointCloud<S>,
    ratios: &[f64],
    seed: u64,
) -> Result<Vec<LevelData<S>>> {
    if ratios.is_empty() {
        return Err(Error::InvalidArgument("at least one level ratio is required".into()));
    }
    if ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) || ratios.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "level ratios must strictly increase within (0, 1], got {ratios:?}"
        )));
    }
    if *ratios.last().expect("non-empty") != 1.0 {
        return Err(Error::InvalidArgument("the finest level ratio must be 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order_p: Vec<usize> = (0..incomplete.len()).collect();
    order_p.shuffle(&mut rng);
    let mut order_m: Vec<usize> = (0..missing.len()).collect();
    order_m.shuffle(&mut rng);

    let subset = |cloud: &PointCloud<S>, order: &[usize], ratio: f64, what: &str, level: usize| -> Result<PointCloud<S>> {
        if ratio == 1.0 {
            return Ok(cloud.clone());
        }
        let count = (ratio * cloud.len() as f64).round() as usize;
        if count == 0 {
            return Err(Error::InvalidArgument(format!("level {level}: {what} part is empty at ratio {ratio}")));
        }
        let mut idx = order[..count].to_vec();
        idx.sort_unstable();
        Ok(cloud.select(&idx))
    };

    ratios
        .iter()
        .enumerate()
        .map(|(level_id, &ratio)| {
            let p = subset(incomplete, &order_p, ratio, "incomplete", level_id)?;
            let m = subset(missing, &order_m, ratio, "missing", level_id)?;
            if p.is_empty() || m.is_empty() {
                return Err(Error::InvalidArgument(format!("level {level_id} has an empty part")));
            }
            let mut complete = p.clone();
            let (pts, ns) = m.clone().into_parts();
            complete.extend(&pts, ns.as_deref())?;
            Ok(LevelData { level_id, incomplete: p, missing: m, complete })
        })
        .collect()
}
