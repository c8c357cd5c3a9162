//! From completed descriptors back to 3D points: lifting, consistency filtering,
//! query selection, the coarse-to-fine pipeline and central-cell denoising.

mod denoise;
mod filter;
mod pipeline;
mod query;

pub use denoise::denoise;
pub use filter::{filter_predictions, FilteredPoint};
pub use pipeline::{complete, run_level, Completion, LevelConfig, LevelOutput, LevelSummary, PipelineConfig, ResolvedLevel};
pub use query::{farthest_point_indices, select_query_points};

use serde::{Deserialize, Serialize};

use crate::backend::INPUT_VALID;
use crate::descriptor::{KaplanDescriptor, PlaneFrame};
use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};
use crate::scalar::Scalar;

/// A candidate point lifted from one descriptor cell, with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord<S> {
    pub point: Point3<S>,
    /// Predicted normal of the cell; the plane normal when the prediction has none.
    pub normal: UnitVector3<S>,
    /// `query_index` of the descriptor that produced the record.
    pub source_query: usize,
    pub source_plane: usize,
    pub predicted_depth: S,
    pub cell: (usize, usize),
}

/// The point at the centre of cell `(i, j)` of `plane`, displaced by `depth` along the plane normal.
pub fn lift_cell<S: Scalar>(plane: &PlaneFrame<S>, i: usize, j: usize, depth: S) -> Result<Point3<S>> {
    plane.lift(i, j, depth)
}

/// Cells where the completed descriptor adds information, lifted to 3D.
///
/// A cell yields a record when it was empty in `input` (valid < 0.5) and is
/// valid in `output` (valid >= `valid_threshold`), or when it is valid in both
/// and the depth moved by more than `depth_change_threshold`.
pub fn predict_points<S: Scalar>(
    input: &KaplanDescriptor<S>,
    output: &KaplanDescriptor<S>,
    depth_change_threshold: S,
    valid_threshold: S,
) -> Result<Vec<PredictionRecord<S>>> {
    if !input.same_layout(output) {
        return Err(Error::InvalidArgument("input and output descriptors have different layouts".into()));
    }
    let observed = S::lit(INPUT_VALID);
    let mut records = Vec::new();
    for (k, (a, b)) in input.planes.iter().zip(&output.planes).enumerate() {
        let frame = &a.frame;
        let r = frame.resolution;
        for i in 0..r {
            for j in 0..r {
                let was_valid = a.valid(i, j) >= observed;
                let is_valid = b.valid(i, j) >= valid_threshold;
                if !is_valid {
                    continue;
                }
                let depth = b.depth(i, j);
                let emit = !was_valid || (depth - a.depth(i, j)).abs() > depth_change_threshold;
                if !emit {
                    continue;
                }
                let normal = UnitVector3::new(b.normal(i, j)).unwrap_or(frame.w_axis);
                records.push(PredictionRecord {
                    point: frame.lift(i, j, depth)?,
                    normal,
                    source_query: input.query_index,
                    source_plane: k,
                    predicted_depth: depth,
                    cell: (i, j),
                });
            }
        }
    }
    Ok(records)
}
