use serde::{Deserialize, Serialize};

use super::{Channel, KaplanDescriptor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Weights of the valid-flag, depth and normal terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights<S> {
    pub w_valid: S,
    pub w_depth: S,
    pub w_normal: S,
}

impl<S: Scalar> Default for LossWeights<S> {
    fn default() -> Self {
        Self { w_valid: S::lit(0.75), w_depth: S::one(), w_normal: S::lit(0.01) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown<S> {
    pub valid_loss: S,
    pub depth_loss: S,
    pub normal_loss: S,
    pub total: S,
}

/// Descriptor loss between a prediction and its ground truth.
///
/// * valid: mean absolute valid-flag difference over every cell of every plane;
/// * depth: mean absolute depth difference over the cells where the ground truth is valid;
/// * normal: mean `1 - cos` angle between normals over ground-truth-valid cells that carry a
///   ground-truth normal. A zero predicted normal counts as orthogonal (`cos = 0`).
///
/// Masked terms are 0 when their mask is empty; a ground truth without normals therefore
/// contributes no normal term.
pub fn compute_losses<S: Scalar>(
    pred: &KaplanDescriptor<S>,
    gt: &KaplanDescriptor<S>,
    weights: &LossWeights<S>,
) -> Result<LossBreakdown<S>> {
    if pred.num_planes() != gt.num_planes() || pred.resolution() != gt.resolution() {
        return Err(Error::InvalidArgument(format!(
            "descriptor shapes differ: {}x{} vs {}x{}",
            pred.num_planes(),
            pred.resolution(),
            gt.num_planes(),
            gt.resolution()
        )));
    }
    let half = S::lit(0.5);
    let (mut valid_sum, mut depth_sum, mut normal_sum) = (S::zero(), S::zero(), S::zero());
    let (mut cells, mut depth_cells, mut normal_cells) = (0usize, 0usize, 0usize);
    for (p, g) in pred.planes.iter().zip(&gt.planes) {
        let pv = p.channel(Channel::Valid).values();
        let gv = g.channel(Channel::Valid).values();
        let pd = p.channel(Channel::Depth).values();
        let gd = g.channel(Channel::Depth).values();
        let r = g.frame.resolution;
        for k in 0..r * r {
            valid_sum += (gv[k] - pv[k]).abs();
            cells += 1;
            if gv[k] < half {
                continue;
            }
            depth_sum += (gd[k] - pd[k]).abs();
            depth_cells += 1;
            let (i, j) = (k / r, k % r);
            let gn = g.normal(i, j);
            let gnorm = gn.norm();
            if gnorm > S::zero() {
                let pn = p.normal(i, j);
                let pnorm = pn.norm();
                // 1 - cos(a, b) = |a/|a| - b/|b||^2 / 2, exactly 0 for identical directions.
                normal_sum += if pnorm > S::zero() {
                    (gn * (S::one() / gnorm) - pn * (S::one() / pnorm)).norm_squared() * S::lit(0.5)
                } else {
                    S::one()
                };
                normal_cells += 1;
            }
        }
    }
    let mean = |sum: S, n: usize| if n == 0 { S::zero() } else { sum / S::from_count(n) };
    let valid_loss = mean(valid_sum, cells);
    let depth_loss = mean(depth_sum, depth_cells);
    let normal_loss = mean(normal_sum, normal_cells);
    Ok(LossBreakdown {
        valid_loss,
        depth_loss,
        normal_loss,
        total: weights.w_valid * valid_loss + weights.w_depth * depth_loss + weights.w_normal * normal_loss,
    })
}
