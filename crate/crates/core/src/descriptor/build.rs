use std::borrow::Cow;

use super::{
    aggregate_cell_depths, attribute_valid_flags, make_planes, DescriptorPlane, KaplanConfig, KaplanDescriptor,
    OrientationMode, PlaneFrame, ProjectionGrid,
};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, UnitVector3};
use crate::kdtree::KdTree;
use crate::normals::neighbourhood_normal;
use crate::scalar::Scalar;

/// Neighbourhood size for estimating the query normal in tangential mode on clouds without normals.
const TANGENT_NEIGHBOURS: usize = 16;

/// Indices (ascending) of the points whose Chebyshev distance to `query` is at most `side_length / 2`.
pub fn collect_box_neighbors<S: Scalar>(cloud: &PointCloud<S>, query: Point3<S>, side_length: S) -> Vec<usize> {
    KdTree::new(cloud.points()).within_box(query, side_length * S::lit(0.5))
}

/// Descriptor construction against one cloud, reusing a single spatial index.
///
/// Immutable after construction; descriptors for many queries can be built concurrently.
#[derive(Debug, Clone)]
pub struct DescriptorBuilder<'a, S: Scalar> {
    cloud: Cow<'a, PointCloud<S>>,
    tree: KdTree<S>,
}

impl<'a, S: Scalar> DescriptorBuilder<'a, S> {
    pub fn new(cloud: &'a PointCloud<S>) -> Self {
        Self { tree: KdTree::new(cloud.points()), cloud: Cow::Borrowed(cloud) }
    }

    /// A builder that owns its cloud.
    pub fn owned(cloud: PointCloud<S>) -> DescriptorBuilder<'static, S> {
        DescriptorBuilder { tree: KdTree::new(cloud.points()), cloud: Cow::Owned(cloud) }
    }

    pub fn cloud(&self) -> &PointCloud<S> {
        &self.cloud
    }

    pub fn box_neighbors(&self, query: Point3<S>, side_length: S) -> Vec<usize> {
        self.tree.within_box(query, side_length * S::lit(0.5))
    }

    /// Surface normal at `query`: the normal of the nearest point when the cloud has
    /// normals, otherwise a local covariance estimate.
    pub fn surface_normal(&self, query: Point3<S>) -> Option<UnitVector3<S>> {
        if let Some(normals) = self.cloud.normals() {
            return self.tree.nearest(query).map(|(i, _)| normals[i]);
        }
        let k = TANGENT_NEIGHBOURS.min(self.cloud.len());
        let idx = self.tree.knn(query, k).ok()?;
        let pts: Vec<_> = idx.iter().map(|&i| self.cloud.points()[i]).collect();
        neighbourhood_normal(query, &pts)
    }

    /// Instantiates the configured planes at `query` and fills them.
    pub fn build(&self, query: Point3<S>, query_index: usize, config: &KaplanConfig<S>) -> Result<KaplanDescriptor<S>> {
        let normal = match config.orientation {
            OrientationMode::Tangential => Some(self.surface_normal(query).unwrap_or_else(UnitVector3::z_axis)),
            _ => None,
        };
        let planes = make_planes(query, normal, config)?;
        self.build_with_planes(query, query_index, &planes, config)
    }

    /// Fills descriptor images for the given planes (all centred on `query`).
    pub fn build_with_planes(
        &self,
        query: Point3<S>,
        query_index: usize,
        planes: &[PlaneFrame<S>],
        config: &KaplanConfig<S>,
    ) -> Result<KaplanDescriptor<S>> {
        if planes.is_empty() {
            return Err(Error::InvalidArgument("a descriptor needs at least one plane".into()));
        }
        for p in planes {
            p.validate()?;
        }
        let mut cached: Option<(Point3<S>, S, Vec<usize>)> = None;
        let mut filled = Vec::with_capacity(planes.len());
        for frame in planes {
            let reuse = matches!(&cached, Some((o, s, _)) if *o == frame.origin && *s == frame.side_length);
            if !reuse {
                let idx = self.box_neighbors(frame.origin, frame.side_length);
                cached = Some((frame.origin, frame.side_length, idx));
            }
            let neighbours = &cached.as_ref().expect("just filled").2;
            filled.push(self.fill_plane(frame, neighbours, config));
        }
        Ok(KaplanDescriptor { query, query_index, planes: filled })
    }

    fn fill_plane(&self, frame: &PlaneFrame<S>, neighbours: &[usize], config: &KaplanConfig<S>) -> DescriptorPlane<S> {
        let r = frame.resolution;
        let points = self.cloud.points();
        let normals = self.cloud.normals();

        let mut grid = ProjectionGrid::new(r);
        // (cell, depth, point index), in ascending point order within each cell after the stable sort.
        let mut entries: Vec<(usize, S, usize)> = Vec::new();
        for &idx in neighbours {
            let (u, v, depth) = frame.project(points[idx]);
            let (Some(i), Some(j)) = (frame.bin(u), frame.bin(v)) else {
                continue;
            };
            grid.record(i, j, u, v);
            entries.push((i * r + j, depth, idx));
        }
        entries.sort_by_key(|e| e.0);

        let valid = attribute_valid_flags(frame, &grid, config.valid_center_radius);
        let mut plane = DescriptorPlane::empty(*frame);
        let mut depths = Vec::new();
        for group in entries.chunk_by(|a, b| a.0 == b.0) {
            let cell = group[0].0;
            let (i, j) = (cell / r, cell % r);
            if valid.get(i, j) < S::one() {
                continue;
            }
            depths.clear();
            depths.extend(group.iter().map(|e| e.1));
            let (depth, members) = aggregate_cell_depths(&depths, config.depth_agg_threshold);
            let normal = match normals {
                Some(ns) => {
                    let sum = members
                        .iter()
                        .fold(Point3::zero(), |acc, &m| acc + *ns[group[m].2]);
                    sum.normalized().unwrap_or(*frame.w_axis)
                }
                None => Point3::zero(),
            };
            plane.set_cell(i, j, depth, S::one(), normal);
        }
        plane
    }
}

/// Builds the descriptor of `cloud` at `query`.
pub fn build_kaplan<S: Scalar>(
    cloud: &PointCloud<S>,
    query: Point3<S>,
    config: &KaplanConfig<S>,
) -> Result<KaplanDescriptor<S>> {
    DescriptorBuilder::new(cloud).build(query, 0, config)
}

/// Builds the images of `cloud` on a given set of planes.
pub fn build_with_planes<S: Scalar>(
    cloud: &PointCloud<S>,
    query: Point3<S>,
    planes: &[PlaneFrame<S>],
    config: &KaplanConfig<S>,
) -> Result<KaplanDescriptor<S>> {
    DescriptorBuilder::new(cloud).build_with_planes(query, 0, planes, config)
}
