//! Chamfer distance and threshold F1, over whole clouds or only the hole region.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::kdtree::KdTree;
use crate::scalar::Scalar;

/// Which part of the ground truth a report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Global,
    HoleOnly,
}

/// Chamfer distance and threshold scores of a prediction against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<S> {
    pub region: Region,
    /// Symmetric mean nearest-neighbour distance; absent when no prediction was evaluated.
    pub chamfer: Option<S>,
    /// Percentage of predicted points within `threshold` of the ground truth.
    pub accuracy: S,
    /// Percentage of ground-truth points within `threshold` of the prediction.
    pub completeness: S,
    pub f1: S,
    pub threshold: S,
    pub num_pred: usize,
    pub num_gt: usize,
    /// Set when the hole-only restriction left no predicted point.
    pub empty_restriction: bool,
}

/// Euclidean distance from every point of `from` to its nearest neighbour in `tree`.
fn nearest_distances<S: Scalar>(from: &[Point3<S>], tree: &KdTree<S>) -> Vec<S> {
    from.par_iter()
        .map(|&p| tree.nearest(p).expect("tree is non-empty").1.sqrt())
        .collect()
}

fn mean<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, &v| acc + v) / S::from_count(values.len())
}

fn percent_within<S: Scalar>(values: &[S], threshold: S) -> S {
    S::lit(100.0) * S::from_count(values.iter().filter(|&&d| d <= threshold).count()) / S::from_count(values.len())
}

/// Harmonic mean of accuracy and completeness, 0 when both are 0.
pub fn harmonic_f1<S: Scalar>(accuracy: S, completeness: S) -> S {
    let sum = accuracy + completeness;
    if sum > S::zero() {
        S::lit(2.0) * accuracy * completeness / sum
    } else {
        S::zero()
    }
}

/// `mean_a min_b |a - b| + mean_b min_a |b - a|`, exact over all points.
pub fn chamfer<S: Scalar>(a: &PointCloud<S>, b: &PointCloud<S>) -> Result<S> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ta = KdTree::new(a.points());
    let tb = KdTree::new(b.points());
    Ok(mean(&nearest_distances(a.points(), &tb)) + mean(&nearest_distances(b.points(), &ta)))
}

/// Chamfer distance, accuracy, completeness and F1 of `pred` against `gt`.
pub fn f1_score<S: Scalar>(pred: &PointCloud<S>, gt: &PointCloud<S>, threshold: S) -> Result<EvalReport<S>> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(threshold > S::zero() && threshold.is_finite()) {
        return Err(Error::InvalidArgument("evaluation threshold must be positive".into()));
    }
    let pred_to_gt = nearest_distances(pred.points(), &KdTree::new(gt.points()));
    let gt_to_pred = nearest_distances(gt.points(), &KdTree::new(pred.points()));
    let accuracy = percent_within(&pred_to_gt, threshold);
    let completeness = percent_within(&gt_to_pred, threshold);
    Ok(EvalReport {
        region: Region::Global,
        chamfer: Some(mean(&pred_to_gt) + mean(&gt_to_pred)),
        accuracy,
        completeness,
        f1: harmonic_f1(accuracy, completeness),
        threshold,
        num_pred: pred.len(),
        num_gt: gt.len(),
        empty_restriction: false,
    })
}

fn point_key<S: Scalar>(p: Point3<S>) -> [u64; 3] {
    p.to_array().map(|c| c.as_f64().to_bits())
}

/// Predicted points whose nearest `gt_complete` point belongs to `gt_missing` (by exact coordinates).
pub fn restrict_to_hole<S: Scalar>(pred: &PointCloud<S>, gt_complete: &PointCloud<S>, gt_missing: &PointCloud<S>) -> Result<PointCloud<S>> {
    if gt_complete.is_empty() {
        return Err(Error::EmptyInput);
    }
    let missing: HashSet<[u64; 3]> = gt_missing.points().iter().map(|&p| point_key(p)).collect();
    let tree = KdTree::new(gt_complete.points());
    let keep: Vec<bool> = pred
        .points()
        .par_iter()
        .map(|&p| {
            let (i, _) = tree.nearest(p).expect("tree is non-empty");
            missing.contains(&point_key(gt_complete.points()[i]))
        })
        .collect();
    let idx: Vec<usize> = keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect();
    Ok(pred.select(&idx))
}

/// Scores only the predicted points that fall in the hole against the missing part.
///
/// When no predicted point falls in the hole, accuracy, completeness and F1 are 0,
/// the Chamfer distance is absent and `empty_restriction` is set.
pub fn hole_region_report<S: Scalar>(
    pred: &PointCloud<S>,
    gt_complete: &PointCloud<S>,
    gt_missing: &PointCloud<S>,
    threshold: S,
) -> Result<EvalReport<S>> {
    if gt_missing.is_empty() {
        return Err(Error::EmptyInput);
    }
    let restricted = restrict_to_hole(pred, gt_complete, gt_missing)?;
    if restricted.is_empty() {
        return Ok(EvalReport {
            region: Region::HoleOnly,
            chamfer: None,
            accuracy: S::zero(),
            completeness: S::zero(),
            f1: S::zero(),
            threshold,
            num_pred: 0,
            num_gt: gt_missing.len(),
            empty_restriction: true,
        });
    }
    let mut report = f1_score(&restricted, gt_missing, threshold)?;
    report.region = Region::HoleOnly;
    Ok(report)
}
