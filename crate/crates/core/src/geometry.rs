//! Point containers, bounding boxes and normalization.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point (or free vector) in object space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Scalar> Point3<S> {
    #[inline]
    pub const fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    #[inline]
    pub fn from_array(a: [S; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance_squared(self, other: Self) -> S {
        (self - other).norm_squared()
    }

    #[inline]
    pub fn distance(self, other: Self) -> S {
        self.distance_squared(other).sqrt()
    }

    /// Largest absolute coordinate difference.
    #[inline]
    pub fn chebyshev_distance(self, other: Self) -> S {
        let d = self - other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }

    #[inline]
    pub fn component_min(self, other: Self) -> Self {
        Self::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    #[inline]
    pub fn component_max(self, other: Self) -> Self {
        Self::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns the vector scaled to unit length, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > S::epsilon() && n.is_finite() {
            Some(self * (S::one() / n))
        } else {
            None
        }
    }

    pub fn cast<T: Scalar>(self) -> Point3<T> {
        Point3::new(T::lit(self.x.as_f64()), T::lit(self.y.as_f64()), T::lit(self.z.as_f64()))
    }
}

impl<S: Scalar> Add for Point3<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<S: Scalar> AddAssign for Point3<S> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
        self.z += rhs.z;
    }
}

impl<S: Scalar> Sub for Point3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<S: Scalar> Mul<S> for Point3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: S) -> Self {
        Self::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl<S: Scalar> Neg for Point3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<S> Index<usize> for Point3<S> {
    type Output = S;
    #[inline]
    fn index(&self, axis: usize) -> &S {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }
}

/// A direction of unit Euclidean length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector3<S>(Point3<S>);

impl<S: Scalar> UnitVector3<S> {
    /// Normalizes `v`; `None` when `v` has no usable direction.
    pub fn new(v: Point3<S>) -> Option<Self> {
        v.normalized().map(Self)
    }

    /// Wraps a vector the caller knows to be unit length already.
    #[inline]
    pub fn new_unchecked(v: Point3<S>) -> Self {
        Self(v)
    }

    pub fn x_axis() -> Self {
        Self(Point3::new(S::one(), S::zero(), S::zero()))
    }

    pub fn y_axis() -> Self {
        Self(Point3::new(S::zero(), S::one(), S::zero()))
    }

    pub fn z_axis() -> Self {
        Self(Point3::new(S::zero(), S::zero(), S::one()))
    }

    #[inline]
    pub fn into_inner(self) -> Point3<S> {
        self.0
    }

    #[inline]
    pub fn as_vector(&self) -> &Point3<S> {
        &self.0
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.0.dot(other.0)
    }

    #[inline]
    pub fn cross(self, other: Self) -> Point3<S> {
        self.0.cross(other.0)
    }

    pub fn flipped(self) -> Self {
        Self(-self.0)
    }

    pub fn cast<T: Scalar>(self) -> UnitVector3<T> {
        UnitVector3(self.0.cast())
    }
}

impl<S: Scalar> std::ops::Deref for UnitVector3<S> {
    type Target = Point3<S>;
    fn deref(&self) -> &Point3<S> {
        &self.0
    }
}

/// Axis-aligned bounds of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox<S> {
    pub min: Point3<S>,
    pub max: Point3<S>,
}

impl<S: Scalar> BoundingBox<S> {
    pub fn from_points(points: &[Point3<S>]) -> Option<Self> {
        let first = *points.first()?;
        let (min, max) = points
            .iter()
            .fold((first, first), |(lo, hi), p| (lo.component_min(*p), hi.component_max(*p)));
        Some(Self { min, max })
    }

    pub fn extent(&self) -> Point3<S> {
        self.max - self.min
    }

    /// Length of the longest box edge.
    pub fn max_extent(&self) -> S {
        let e = self.extent();
        e.x.max(e.y).max(e.z)
    }

    pub fn center(&self) -> Point3<S> {
        (self.min + self.max) * S::lit(0.5)
    }

    pub fn contains(&self, p: Point3<S>) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }
}

/// Positions with optional per-point unit normals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud<S> {
    points: Vec<Point3<S>>,
    normals: Option<Vec<UnitVector3<S>>>,
}

impl<S: Scalar> PointCloud<S> {
    /// Builds a cloud without normals. Fails on non-finite coordinates.
    pub fn new(points: Vec<Point3<S>>) -> Result<Self> {
        Self::check_points(&points)?;
        Ok(Self { points, normals: None })
    }

    pub fn with_normals(points: Vec<Point3<S>>, normals: Vec<UnitVector3<S>>) -> Result<Self> {
        Self::check_points(&points)?;
        if normals.len() != points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        Ok(Self { points, normals: Some(normals) })
    }

    pub(crate) fn from_parts_unchecked(
        points: Vec<Point3<S>>,
        normals: Option<Vec<UnitVector3<S>>>,
    ) -> Self {
        debug_assert!(normals.as_ref().is_none_or(|n| n.len() == points.len()));
        Self { points, normals }
    }

    fn check_points(points: &[Point3<S>]) -> Result<()> {
        match points.iter().position(|p| !p.is_finite()) {
            Some(i) => Err(Error::InvalidArgument(format!("point {i} has a non-finite coordinate"))),
            None => Ok(()),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point3<S>] {
        &self.points
    }

    #[inline]
    pub fn normals(&self) -> Option<&[UnitVector3<S>]> {
        self.normals.as_deref()
    }

    #[inline]
    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    pub fn into_parts(self) -> (Vec<Point3<S>>, Option<Vec<UnitVector3<S>>>) {
        (self.points, self.normals)
    }

    pub fn bounding_box(&self) -> Option<BoundingBox<S>> {
        BoundingBox::from_points(&self.points)
    }

    pub fn without_normals(&self) -> Self {
        Self { points: self.points.clone(), normals: None }
    }

    /// Sub-cloud made of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let normals = self.normals.as_ref().map(|n| indices.iter().map(|&i| n[i]).collect());
        Self { points, normals }
    }

    /// Appends points. Normals are kept only if both sides carry them.
    pub fn extend(&mut self, points: &[Point3<S>], normals: Option<&[UnitVector3<S>]>) -> Result<()> {
        Self::check_points(points)?;
        match (&mut self.normals, normals) {
            (Some(mine), Some(theirs)) => {
                if theirs.len() != points.len() {
                    return Err(Error::InvalidArgument("normal count mismatch".into()));
                }
                mine.extend_from_slice(theirs);
            }
            (Some(_), None) => self.normals = None,
            (None, _) => {}
        }
        self.points.extend_from_slice(points);
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> PointCloud<T> {
        PointCloud {
            points: self.points.iter().map(|p| p.cast()).collect(),
            normals: self.normals.as_ref().map(|n| n.iter().map(|v| v.cast()).collect()),
        }
    }
}

/// Affine map `p -> (p + translation) * scale` taking a cloud into the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTransform<S> {
    pub translation: Point3<S>,
    pub scale: S,
}

impl<S: Scalar> NormalizeTransform<S> {
    #[inline]
    pub fn apply(&self, p: Point3<S>) -> Point3<S> {
        (p + self.translation) * self.scale
    }

    #[inline]
    pub fn invert(&self, p: Point3<S>) -> Point3<S> {
        p * (S::one() / self.scale) - self.translation
    }
}

/// Centers the bounding box at the origin and scales its longest edge to 1.
///
/// A cloud with zero extent is only translated (scale 1).
pub fn normalize_cloud<S: Scalar>(cloud: &PointCloud<S>) -> Result<(PointCloud<S>, NormalizeTransform<S>)> {
    let bbox = cloud.bounding_box().ok_or(Error::EmptyInput)?;
    let extent = bbox.max_extent();
    let scale = if extent > S::zero() { S::one() / extent } else { S::one() };
    let transform = NormalizeTransform { translation: -bbox.center(), scale };
    let points = cloud.points().iter().map(|&p| transform.apply(p)).collect();
    Ok((PointCloud::from_parts_unchecked(points, cloud.normals.clone()), transform))
}
