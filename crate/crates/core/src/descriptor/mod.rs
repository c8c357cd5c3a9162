//! The multi-plane descriptor: `K` oriented planes around a query point, each an
//! `R x R` image with five channels (depth, valid flag, normal x/y/z).

mod aggregate;
mod build;
pub mod format;
mod loss;
mod planes;
mod valid;

use serde::{Deserialize, Serialize};

pub use aggregate::aggregate_cell_depths;
pub use build::{build_kaplan, build_with_planes, collect_box_neighbors, DescriptorBuilder};
pub use loss::{compute_losses, LossBreakdown, LossWeights};
pub use planes::{frame_from_normal, make_planes};
pub use valid::{attribute_valid_flags, ProjectionGrid};

use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};
use crate::scalar::Scalar;

/// Number of channels per plane.
pub const CHANNELS: usize = 5;

/// Channel order inside a plane, as stored in memory and on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Channel {
    Depth = 0,
    Valid = 1,
    NormalX = 2,
    NormalY = 3,
    NormalZ = 4,
}

/// Orthonormal projection plane centred on a query point.
///
/// `w_axis` is the plane normal, `(u_axis, v_axis, w_axis)` is right-handed.
/// Cell `(i, j)` spans `u` index `i` and `v` index `j`; its centre sits at
/// `u = (i + 0.5) / R * side - side / 2` (same for `v`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFrame<S> {
    pub origin: Point3<S>,
    pub u_axis: UnitVector3<S>,
    pub v_axis: UnitVector3<S>,
    pub w_axis: UnitVector3<S>,
    pub side_length: S,
    pub resolution: usize,
}

impl<S: Scalar> PlaneFrame<S> {
    pub fn new(
        origin: Point3<S>,
        u_axis: UnitVector3<S>,
        v_axis: UnitVector3<S>,
        w_axis: UnitVector3<S>,
        side_length: S,
        resolution: usize,
    ) -> Result<Self> {
        let frame = Self { origin, u_axis, v_axis, w_axis, side_length, resolution };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        check_resolution(self.resolution)?;
        if !(self.side_length > S::zero() && self.side_length.is_finite()) {
            return Err(Error::InvalidConfig("plane side length must be positive".into()));
        }
        if !self.origin.is_finite() {
            return Err(Error::InvalidConfig("plane origin must be finite".into()));
        }
        let tol = S::lit(1e-6);
        let axes = [self.u_axis, self.v_axis, self.w_axis];
        for a in &axes {
            if (a.norm() - S::one()).abs() > tol {
                return Err(Error::InvalidConfig("plane axes must be unit length".into()));
            }
        }
        if self.u_axis.dot(self.v_axis).abs() > tol
            || self.u_axis.dot(self.w_axis).abs() > tol
            || self.v_axis.dot(self.w_axis).abs() > tol
        {
            return Err(Error::InvalidConfig("plane axes must be orthogonal".into()));
        }
        if self.u_axis.cross(self.v_axis).dot(*self.w_axis) < S::zero() {
            return Err(Error::InvalidConfig("plane axes must be right-handed".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn cell_size(&self) -> S {
        self.side_length / S::from_count(self.resolution)
    }

    /// Index of the central cell along either axis.
    #[inline]
    pub fn central_index(&self) -> usize {
        self.resolution / 2
    }

    /// In-plane coordinate of the centre of cell index `i`.
    #[inline]
    pub fn cell_coordinate(&self, i: usize) -> S {
        let r = S::from_count(self.resolution);
        (S::from_count(i) + S::lit(0.5)) / r * self.side_length - self.side_length * S::lit(0.5)
    }

    /// `(u, v, depth)` of `p` in this frame.
    #[inline]
    pub fn project(&self, p: Point3<S>) -> (S, S, S) {
        let d = p - self.origin;
        (d.dot(*self.u_axis), d.dot(*self.v_axis), d.dot(*self.w_axis))
    }

    /// Grid index for an in-plane coordinate, `None` outside the plane square.
    #[inline]
    pub fn bin(&self, coordinate: S) -> Option<usize> {
        let half = self.side_length * S::lit(0.5);
        if !(coordinate >= -half && coordinate <= half) {
            return None;
        }
        let t = ((coordinate + half) / self.side_length * S::from_count(self.resolution)).floor();
        let i = t.to_usize()?;
        Some(i.min(self.resolution - 1))
    }

    /// The 3D point at the centre of cell `(i, j)` displaced by `depth` along the normal.
    pub fn lift(&self, i: usize, j: usize, depth: S) -> Result<Point3<S>> {
        if i >= self.resolution || j >= self.resolution {
            return Err(Error::CellOutOfRange { i, j, resolution: self.resolution });
        }
        Ok(self.origin
            + *self.u_axis * self.cell_coordinate(i)
            + *self.v_axis * self.cell_coordinate(j)
            + *self.w_axis * depth)
    }

    pub fn cast<T: Scalar>(&self) -> PlaneFrame<T> {
        PlaneFrame {
            origin: self.origin.cast(),
            u_axis: self.u_axis.cast(),
            v_axis: self.v_axis.cast(),
            w_axis: self.w_axis.cast(),
            side_length: T::lit(self.side_length.as_f64()),
            resolution: self.resolution,
        }
    }
}

pub(crate) fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 3 || resolution.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "resolution must be odd and at least 3, got {resolution}"
        )));
    }
    Ok(())
}

/// How plane normals are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationMode {
    /// Coordinate axes plus fixed 45 degree rotations (K = 3, 9 or 27).
    #[default]
    Canonical,
    /// Seeded random normals with pairwise angles of at least 30 degrees.
    RandomMin30,
    /// A single plane perpendicular to the surface normal at the query point.
    Tangential,
}

/// Descriptor geometry and aggregation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(default, deny_unknown_fields)]
pub struct KaplanConfig<S> {
    pub num_planes: usize,
    pub resolution: usize,
    /// Edge of the axis-aligned box around the query point; also the plane side.
    pub side_length: S,
    pub orientation: OrientationMode,
    /// Gap tolerance of the per-cell moving-average depth clustering.
    pub depth_agg_threshold: S,
    /// Max barycenter-to-centre distance for a valid cell, as a fraction of the cell size.
    pub valid_center_radius: S,
    pub rng_seed: u64,
}

impl<S: Scalar> Default for KaplanConfig<S> {
    fn default() -> Self {
        Self {
            num_planes: 3,
            resolution: 35,
            side_length: S::one(),
            orientation: OrientationMode::Canonical,
            depth_agg_threshold: S::lit(0.001),
            valid_center_radius: S::lit(0.4),
            rng_seed: 0,
        }
    }
}

impl<S: Scalar> KaplanConfig<S> {
    pub fn validate(&self) -> Result<()> {
        check_resolution(self.resolution)?;
        if self.num_planes == 0 {
            return Err(Error::InvalidConfig("num_planes must be at least 1".into()));
        }
        match self.orientation {
            OrientationMode::Canonical if ![3, 9, 27].contains(&self.num_planes) => {
                return Err(Error::InvalidConfig(format!(
                    "canonical orientation supports 3, 9 or 27 planes, got {}",
                    self.num_planes
                )))
            }
            OrientationMode::Tangential if self.num_planes != 1 => {
                return Err(Error::InvalidConfig("tangential orientation uses exactly 1 plane".into()))
            }
            _ => {}
        }
        let positive = |v: S, name: &str| {
            if v > S::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive")))
            }
        };
        positive(self.side_length, "side_length")?;
        positive(self.depth_agg_threshold, "depth_agg_threshold")?;
        positive(self.valid_center_radius, "valid_center_radius")
    }
}

/// One `R x R` channel, row-major over `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelImage<S> {
    resolution: usize,
    values: Vec<S>,
}

impl<S: Scalar> ChannelImage<S> {
    pub fn zeros(resolution: usize) -> Self {
        Self { resolution, values: vec![S::zero(); resolution * resolution] }
    }

    pub fn from_values(resolution: usize, values: Vec<S>) -> Result<Self> {
        if values.len() != resolution * resolution {
            return Err(Error::InvalidArgument(format!(
                "{} values for a {resolution}x{resolution} image",
                values.len()
            )));
        }
        Ok(Self { resolution, values })
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[i * self.resolution + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.values[i * self.resolution + j] = value;
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }
}

/// A projection plane with its five channel images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorPlane<S> {
    pub frame: PlaneFrame<S>,
    pub channels: [ChannelImage<S>; CHANNELS],
}

impl<S: Scalar> DescriptorPlane<S> {
    pub fn empty(frame: PlaneFrame<S>) -> Self {
        let r = frame.resolution;
        Self { frame, channels: std::array::from_fn(|_| ChannelImage::zeros(r)) }
    }

    #[inline]
    pub fn channel(&self, c: Channel) -> &ChannelImage<S> {
        &self.channels[c as usize]
    }

    #[inline]
    pub fn channel_mut(&mut self, c: Channel) -> &mut ChannelImage<S> {
        &mut self.channels[c as usize]
    }

    #[inline]
    pub fn depth(&self, i: usize, j: usize) -> S {
        self.channel(Channel::Depth).get(i, j)
    }

    #[inline]
    pub fn valid(&self, i: usize, j: usize) -> S {
        self.channel(Channel::Valid).get(i, j)
    }

    #[inline]
    pub fn normal(&self, i: usize, j: usize) -> Point3<S> {
        Point3::new(
            self.channel(Channel::NormalX).get(i, j),
            self.channel(Channel::NormalY).get(i, j),
            self.channel(Channel::NormalZ).get(i, j),
        )
    }

    /// Writes every channel of one cell.
    pub fn set_cell(&mut self, i: usize, j: usize, depth: S, valid: S, normal: Point3<S>) {
        self.channel_mut(Channel::Depth).set(i, j, depth);
        self.channel_mut(Channel::Valid).set(i, j, valid);
        self.channel_mut(Channel::NormalX).set(i, j, normal.x);
        self.channel_mut(Channel::NormalY).set(i, j, normal.y);
        self.channel_mut(Channel::NormalZ).set(i, j, normal.z);
    }

    /// Copies every channel of cell `(i, j)` from `other`.
    pub fn copy_cell_from(&mut self, other: &Self, i: usize, j: usize) {
        for c in 0..CHANNELS {
            let v = other.channels[c].get(i, j);
            self.channels[c].set(i, j, v);
        }
    }
}

/// The stacked per-plane images computed at one query point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaplanDescriptor<S> {
    pub query: Point3<S>,
    /// Provenance: which query point of a batch produced this descriptor. Not serialized to `.kpln`.
    pub query_index: usize,
    pub planes: Vec<DescriptorPlane<S>>,
}

impl<S: Scalar> KaplanDescriptor<S> {
    pub fn num_planes(&self) -> usize {
        self.planes.len()
    }

    pub fn resolution(&self) -> usize {
        self.planes.first().map_or(0, |p| p.frame.resolution)
    }

    /// True when `other` has the same plane count, resolution and frames.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.planes.len() == other.planes.len()
            && self.planes.iter().zip(&other.planes).all(|(a, b)| a.frame == b.frame)
    }

    /// Number of cells with a valid flag of at least `threshold`.
    pub fn count_valid(&self, threshold: S) -> usize {
        self.planes
            .iter()
            .map(|p| p.channel(Channel::Valid).values().iter().filter(|&&v| v >= threshold).count())
            .sum()
    }

    pub fn cast<T: Scalar>(&self) -> KaplanDescriptor<T> {
        KaplanDescriptor {
            query: self.query.cast(),
            query_index: self.query_index,
            planes: self
                .planes
                .iter()
                .map(|p| DescriptorPlane {
                    frame: p.frame.cast(),
                    channels: std::array::from_fn(|c| ChannelImage {
                        resolution: p.channels[c].resolution,
                        values: p.channels[c].values.iter().map(|v| T::lit(v.as_f64())).collect(),
                    }),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_frame(side: f64, r: usize) -> PlaneFrame<f64> {
        PlaneFrame::new(
            Point3::new(0.5, -0.25, 2.0),
            UnitVector3::x_axis(),
            UnitVector3::y_axis(),
            UnitVector3::z_axis(),
            side,
            r,
        )
        .unwrap()
    }

    #[test]
    fn central_cell_centre_is_the_origin() {
        for r in [3, 15, 35, 65] {
            let f = z_frame(0.7, r);
            let c = f.central_index();
            assert_eq!(f.cell_coordinate(c), 0.0);
            assert_eq!(f.lift(c, c, 0.0).unwrap(), f.origin);
        }
    }

    #[test]
    fn lift_on_z_plane_sets_height() {
        let f = z_frame(1.0, 35);
        let p = f.lift(17, 17, 0.3).unwrap();
        assert_eq!(p.z, 2.3);
        assert!(f.lift(35, 0, 0.0).is_err());
    }

    #[test]
    fn frame_rejects_bad_geometry() {
        let o = Point3::zero();
        let (x, y, z) = (UnitVector3::x_axis(), UnitVector3::y_axis(), UnitVector3::z_axis());
        assert!(PlaneFrame::new(o, y, x, z, 1.0, 35).is_err()); // left-handed
        assert!(PlaneFrame::new(o, x, x, z, 1.0, 35).is_err());
        assert!(PlaneFrame::new(o, x, y, z, 1.0, 36).is_err());
        assert!(PlaneFrame::new(o, x, y, z, 0.0, 35).is_err());
    }

    #[test]
    fn binning_covers_the_closed_square() {
        let f = z_frame(1.0, 5);
        assert_eq!(f.bin(-0.5), Some(0));
        assert_eq!(f.bin(0.5), Some(4));
        assert_eq!(f.bin(0.0), Some(2));
        assert_eq!(f.bin(0.5000001), None);
    }

    #[test]
    fn config_validation() {
        let mut c = KaplanConfig::<f64>::default();
        assert!(c.validate().is_ok());
        c.resolution = 34;
        assert!(c.validate().is_err());
        c.resolution = 35;
        c.num_planes = 4;
        assert!(c.validate().is_err());
        c.orientation = OrientationMode::RandomMin30;
        assert!(c.validate().is_ok());
        c.orientation = OrientationMode::Tangential;
        assert!(c.validate().is_err());
    }
}
