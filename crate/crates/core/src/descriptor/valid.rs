use super::{ChannelImage, PlaneFrame};
use crate::scalar::Scalar;

/// Per-cell projection counts and in-plane coordinate sums for one plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGrid<S> {
    resolution: usize,
    counts: Vec<usize>,
    sums: Vec<[S; 2]>,
}

impl<S: Scalar> ProjectionGrid<S> {
    pub fn new(resolution: usize) -> Self {
        let n = resolution * resolution;
        Self { resolution, counts: vec![0; n], sums: vec![[S::zero(); 2]; n] }
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Records one projection at in-plane coordinates `(u, v)` falling into cell `(i, j)`.
    #[inline]
    pub fn record(&mut self, i: usize, j: usize, u: S, v: S) {
        let k = i * self.resolution + j;
        self.counts[k] += 1;
        self.sums[k][0] += u;
        self.sums[k][1] += v;
    }

    /// Overwrites a cell with `count` projections whose barycenter is `barycenter`.
    pub fn set_cell(&mut self, i: usize, j: usize, count: usize, barycenter: (S, S)) {
        let k = i * self.resolution + j;
        let n = S::from_count(count);
        self.counts[k] = count;
        self.sums[k] = [barycenter.0 * n, barycenter.1 * n];
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.resolution + j]
    }

    pub fn barycenter(&self, i: usize, j: usize) -> Option<(S, S)> {
        let k = i * self.resolution + j;
        let n = self.counts[k];
        (n > 0).then(|| {
            let n = S::from_count(n);
            (self.sums[k][0] / n, self.sums[k][1] / n)
        })
    }
}

/// Valid-flag image of one plane.
///
/// Pass 1 marks a cell valid when it received projections and their barycenter
/// lies within `center_radius * cell_size` of the cell centre. Pass 2 then also
/// marks every still-invalid cell that received projections and has at least
/// three valid 8-neighbours according to pass 1.
pub fn attribute_valid_flags<S: Scalar>(
    plane: &PlaneFrame<S>,
    grid: &ProjectionGrid<S>,
    center_radius: S,
) -> ChannelImage<S> {
    let r = plane.resolution;
    assert_eq!(grid.resolution(), r, "projection grid does not match the plane resolution");
    let max_offset = center_radius * plane.cell_size();
    let max_offset2 = max_offset * max_offset;

    let mut first = vec![false; r * r];
    for i in 0..r {
        let cu = plane.cell_coordinate(i);
        for j in 0..r {
            if let Some((bu, bv)) = grid.barycenter(i, j) {
                let cv = plane.cell_coordinate(j);
                let (du, dv) = (bu - cu, bv - cv);
                first[i * r + j] = du * du + dv * dv <= max_offset2;
            }
        }
    }

    let mut image = ChannelImage::zeros(r);
    for i in 0..r {
        for j in 0..r {
            let valid = first[i * r + j] || (grid.count(i, j) > 0 && valid_neighbours(&first, r, i, j) >= 3);
            if valid {
                image.set(i, j, S::one());
            }
        }
    }
    image
}

fn valid_neighbours(flags: &[bool], r: usize, i: usize, j: usize) -> usize {
    let mut n = 0;
    for ni in i.saturating_sub(1)..=(i + 1).min(r - 1) {
        for nj in j.saturating_sub(1)..=(j + 1).min(r - 1) {
            if (ni, nj) != (i, j) && flags[ni * r + nj] {
                n += 1;
            }
        }
    }
    n
}
