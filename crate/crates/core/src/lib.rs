//! Point cloud shape completion with multi-plane (KAPLAN) descriptors.
//!
//! A descriptor projects the neighbourhood of a query point onto `K` planes,
//! each an `R x R` image of depth, valid flag and normal. A completion backend
//! fills the empty cells; filled cells are lifted back to 3D, filtered for
//! consistency across queries and appended to the cloud, level by level from a
//! coarse to a fine box size.
//!
//! Everything is generic over the scalar type ([`Scalar`], `f32` or `f64`).
//! The aliases at the crate root fix it to [`Real`] = `f64`.

pub mod backend;
pub mod completion;
pub mod datagen;
pub mod descriptor;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod normals;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type.
pub type Real = f64;

pub type Point3 = geometry::Point3<Real>;
pub type UnitVector3 = geometry::UnitVector3<Real>;
pub type BoundingBox = geometry::BoundingBox<Real>;
pub type PointCloud = geometry::PointCloud<Real>;
pub type NormalizeTransform = geometry::NormalizeTransform<Real>;
pub type KdTree = kdtree::KdTree<Real>;
pub type PlaneFrame = descriptor::PlaneFrame<Real>;
pub type KaplanConfig = descriptor::KaplanConfig<Real>;
pub type KaplanDescriptor = descriptor::KaplanDescriptor<Real>;
pub type LossWeights = descriptor::LossWeights<Real>;
pub type LossBreakdown = descriptor::LossBreakdown<Real>;
pub type PredictionRecord = completion::PredictionRecord<Real>;
pub type LevelConfig = completion::LevelConfig<Real>;
pub type PipelineConfig = completion::PipelineConfig<Real>;
pub type EvalReport = metrics::EvalReport<Real>;
pub type LevelData = datagen::LevelData<Real>;
