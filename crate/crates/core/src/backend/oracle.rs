use super::{BackendError, CompletionBackend};
use crate::descriptor::{DescriptorBuilder, KaplanConfig, KaplanDescriptor, PlaneFrame};
use crate::geometry::PointCloud;
use crate::scalar::Scalar;

/// Ground-truth oracle: rebuilds every descriptor on the complete cloud, on the
/// same planes as the input. The upper bound a learned model could reach.
#[derive(Debug, Clone)]
pub struct GtOracleBackend<S: Scalar> {
    builder: DescriptorBuilder<'static, S>,
    config: KaplanConfig<S>,
}

impl<S: Scalar> GtOracleBackend<S> {
    /// `config` supplies the depth clustering threshold and valid-cell radius;
    /// plane geometry always comes from the input descriptor.
    pub fn new(complete_cloud: PointCloud<S>, config: KaplanConfig<S>) -> Self {
        Self { builder: DescriptorBuilder::owned(complete_cloud), config }
    }

    pub fn complete_cloud(&self) -> &PointCloud<S> {
        self.builder.cloud()
    }
}

impl<S: Scalar> CompletionBackend<S> for GtOracleBackend<S> {
    fn name(&self) -> &str {
        "gt-oracle"
    }

    fn supports_normals(&self) -> bool {
        self.builder.cloud().has_normals()
    }

    fn predict(&self, k0: &KaplanDescriptor<S>) -> Result<KaplanDescriptor<S>, BackendError> {
        let frames: Vec<PlaneFrame<S>> = k0.planes.iter().map(|p| p.frame).collect();
        self.builder
            .build_with_planes(k0.query, k0.query_index, &frames, &self.config)
            .map_err(|e| BackendError::Rebuild(e.to_string()))
    }
}
