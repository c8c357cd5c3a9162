use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{filter_predictions, predict_points, select_query_points, PredictionRecord};
use crate::backend::{complete_descriptor, CompletionBackend};
use crate::descriptor::{DescriptorBuilder, KaplanConfig};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, UnitVector3};
use crate::scalar::Scalar;

/// One level of the coarse-to-fine scheme.
///
/// Optional thresholds default to values derived from the level's cell size
/// (`side_length / resolution`): depth change `2 x cell`, filter voxel `1 x cell`,
/// Gaussian sigma `side_length / 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(default, deny_unknown_fields)]
pub struct LevelConfig<S> {
    pub level_id: usize,
    pub num_query_points: usize,
    /// Descriptor box edge as a fraction of the input's largest bounding-box edge.
    /// When absent, `kaplan.side_length` is used as an absolute length.
    pub box_scale: Option<S>,
    pub kaplan: KaplanConfig<S>,
    pub depth_change_threshold: Option<S>,
    pub filter_voxel_size: Option<S>,
    pub filter_sigma: Option<S>,
    pub min_support: usize,
}

impl<S: Scalar> Default for LevelConfig<S> {
    fn default() -> Self {
        Self::standard(0)
    }
}

impl<S: Scalar> LevelConfig<S> {
    /// Default level `level_id`: 10/20/30 queries and a box of 1, 1/2, 1/4 of the object extent.
    pub fn standard(level_id: usize) -> Self {
        Self {
            level_id,
            num_query_points: 10 * (level_id + 1),
            box_scale: Some(S::lit(0.5f64.powi(level_id as i32))),
            kaplan: KaplanConfig::default(),
            depth_change_threshold: None,
            filter_voxel_size: None,
            filter_sigma: None,
            min_support: 2,
        }
    }

    /// Fixes the box size against an object extent and fills in derived thresholds.
    pub fn resolve(&self, object_extent: S) -> Result<ResolvedLevel<S>> {
        let mut kaplan = self.kaplan;
        if let Some(scale) = self.box_scale {
            if !(scale > S::zero() && scale.is_finite()) {
                return Err(Error::InvalidConfig(format!("level {}: box_scale must be positive", self.level_id)));
            }
            kaplan.side_length = scale * object_extent;
        }
        kaplan
            .validate()
            .map_err(|e| Error::InvalidConfig(format!("level {}: {e}", self.level_id)))?;
        if self.num_query_points == 0 {
            return Err(Error::InvalidConfig(format!("level {}: num_query_points must be at least 1", self.level_id)));
        }
        let cell = kaplan.side_length / S::from_count(kaplan.resolution);
        let positive = |v: Option<S>, default: S, name: &str| -> Result<S> {
            let v = v.unwrap_or(default);
            if v > S::zero() && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidConfig(format!("level {}: {name} must be positive", self.level_id)))
            }
        };
        Ok(ResolvedLevel {
            level_id: self.level_id,
            num_query_points: self.num_query_points,
            kaplan,
            depth_change_threshold: positive(self.depth_change_threshold, S::lit(2.0) * cell, "depth_change_threshold")?,
            filter_voxel_size: positive(self.filter_voxel_size, cell, "filter_voxel_size")?,
            filter_sigma: positive(self.filter_sigma, kaplan.side_length * S::lit(0.25), "filter_sigma")?,
            min_support: self.min_support,
        })
    }
}

/// A level with absolute geometry and every threshold fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ResolvedLevel<S> {
    pub level_id: usize,
    pub num_query_points: usize,
    pub kaplan: KaplanConfig<S>,
    pub depth_change_threshold: S,
    pub filter_voxel_size: S,
    pub filter_sigma: S,
    pub min_support: usize,
}

/// The whole coarse-to-fine run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig<S> {
    pub levels: Vec<LevelConfig<S>>,
    /// Output valid flags at or above this value count as filled.
    pub valid_threshold: S,
    /// Seeds query selection; level `l` uses `rng_seed + l`.
    pub rng_seed: u64,
}

impl<S: Scalar> Default for PipelineConfig<S> {
    fn default() -> Self {
        Self { levels: (0..3).map(LevelConfig::standard).collect(), valid_threshold: S::lit(0.5), rng_seed: 0 }
    }
}

impl<S: Scalar> PipelineConfig<S> {
    /// Resolves every level against `object_extent` and checks that box sizes strictly decrease.
    pub fn resolve(&self, object_extent: S) -> Result<Vec<ResolvedLevel<S>>> {
        if !(self.valid_threshold > S::zero() && self.valid_threshold <= S::one()) {
            return Err(Error::InvalidConfig("valid_threshold must lie in (0, 1]".into()));
        }
        let levels = self.levels.iter().map(|l| l.resolve(object_extent)).collect::<Result<Vec<_>>>()?;
        if let Some(w) = levels.windows(2).find(|w| w[1].kaplan.side_length >= w[0].kaplan.side_length) {
            return Err(Error::InvalidConfig(format!(
                "level side lengths must strictly decrease (level {} is not smaller than level {})",
                w[1].level_id, w[0].level_id
            )));
        }
        Ok(levels)
    }
}

/// Result of one level.
#[derive(Debug, Clone)]
pub struct LevelOutput<S> {
    pub augmented: PointCloud<S>,
    pub new_points: Vec<Point3<S>>,
    pub new_normals: Vec<UnitVector3<S>>,
    /// Distinct queries (indices into the level's query list) supporting each new point.
    pub support: Vec<Vec<usize>>,
    pub num_records: usize,
}

/// Per-level record of a [`complete`] run.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "S: Scalar")]
pub struct LevelSummary<S> {
    pub level: ResolvedLevel<S>,
    pub queries: Vec<Point3<S>>,
    /// Whether the queries came from the previous level's new points.
    pub queries_from_new_points: bool,
    pub num_records: usize,
    pub new_points: Vec<Point3<S>>,
    pub support: Vec<Vec<usize>>,
    pub seconds: f64,
}

/// Output of [`complete`].
#[derive(Debug, Clone)]
pub struct Completion<S> {
    pub cloud: PointCloud<S>,
    pub levels: Vec<LevelSummary<S>>,
}

impl<S: Scalar> Completion<S> {
    /// Number of points the run appended.
    pub fn num_new_points(&self) -> usize {
        self.levels.iter().map(|l| l.new_points.len()).sum()
    }
}

/// Evaluates `f` for `0..n`, in parallel unless the backend is single-threaded; output order is `0..n`.
pub(crate) fn map_queries<T: Send>(n: usize, max_concurrency: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    match max_concurrency {
        Some(1) => (0..n).map(f).collect(),
        Some(limit) if limit < rayon::current_num_threads() => {
            match rayon::ThreadPoolBuilder::new().num_threads(limit).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(_) => (0..n).map(f).collect(),
            }
        }
        _ => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Runs one level: a descriptor per query, backend completion, point prediction,
/// filtering, and appending the survivors to `cloud`.
///
/// Descriptor `q` carries `query_index = q`. Input points are never moved or removed.
pub fn run_level<S: Scalar>(
    cloud: &PointCloud<S>,
    backend: &dyn CompletionBackend<S>,
    level: &ResolvedLevel<S>,
    queries: &[Point3<S>],
    valid_threshold: S,
) -> Result<LevelOutput<S>> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("a level needs at least one query point".into()));
    }
    let builder = DescriptorBuilder::new(cloud);
    let per_query = map_queries(queries.len(), backend.max_concurrency(), |q| -> Result<Vec<PredictionRecord<S>>> {
        let k0 = builder.build(queries[q], q, &level.kaplan)?;
        let k = complete_descriptor(backend, &k0, valid_threshold).map_err(|source| Error::Backend { query: q, source })?;
        predict_points(&k0, &k, level.depth_change_threshold, valid_threshold)
    });
    let mut records = Vec::new();
    for r in per_query {
        records.extend(r?);
    }
    let kept = filter_predictions(&records, level.filter_voxel_size, level.min_support, level.filter_sigma);
    let new_points: Vec<_> = kept.iter().map(|f| f.record.point).collect();
    let new_normals: Vec<_> = kept.iter().map(|f| f.record.normal).collect();
    let support = kept.into_iter().map(|f| f.support).collect();
    let mut augmented = cloud.clone();
    augmented.extend(&new_points, Some(&new_normals))?;
    log::debug!(
        "level {}: {} queries, {} records, {} new points",
        level.level_id,
        queries.len(),
        records.len(),
        new_points.len()
    );
    Ok(LevelOutput { augmented, new_points, new_normals, support, num_records: records.len() })
}

/// Coarse-to-fine completion of `cloud`.
///
/// Level 0 draws its queries from the input by farthest-point sampling. Each
/// later level draws them from the previous level's new points, or from the
/// whole current cloud when there are none. Box sizes are relative to the
/// input's largest bounding-box edge.
pub fn complete<S: Scalar>(
    cloud: &PointCloud<S>,
    backend: &dyn CompletionBackend<S>,
    cfg: &PipelineConfig<S>,
) -> Result<Completion<S>> {
    let extent = cloud.bounding_box().ok_or(Error::EmptyInput)?.max_extent();
    let levels = cfg.resolve(extent)?;
    let mut current = cloud.clone();
    let mut previous_new: Vec<Point3<S>> = Vec::new();
    let mut summaries = Vec::with_capacity(levels.len());
    for (l, level) in levels.iter().enumerate() {
        let started = Instant::now();
        let seed = cfg.rng_seed.wrapping_add(l as u64);
        let from_new = !previous_new.is_empty();
        let pool = if from_new {
            PointCloud::new(previous_new.clone())?
        } else {
            current.without_normals()
        };
        let queries = select_query_points(&pool, level.num_query_points, seed);
        let out = run_level(&current, backend, level, &queries, cfg.valid_threshold)?;
        log::info!(
            "level {}: side {:.4}, {} queries, {} new points",
            level.level_id,
            level.kaplan.side_length.as_f64(),
            queries.len(),
            out.new_points.len()
        );
        previous_new = out.new_points.clone();
        current = out.augmented;
        summaries.push(LevelSummary {
            level: *level,
            queries,
            queries_from_new_points: from_new,
            num_records: out.num_records,
            new_points: out.new_points,
            support: out.support,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(Completion { cloud: current, levels: summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::IdentityBackend;

    fn grid_cloud() -> PointCloud<f64> {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push(Point3::new(i as f64 / 19.0, j as f64 / 19.0, 0.0));
            }
        }
        let n = pts.len();
        PointCloud::with_normals(pts, vec![UnitVector3::z_axis(); n]).unwrap()
    }

    #[test]
    fn defaults_halve_the_box_per_level() {
        let levels = PipelineConfig::<f64>::default().resolve(2.0).unwrap();
        let sides: Vec<_> = levels.iter().map(|l| l.kaplan.side_length).collect();
        assert_eq!(sides, vec![2.0, 1.0, 0.5]);
        assert_eq!(levels.iter().map(|l| l.num_query_points).collect::<Vec<_>>(), vec![10, 20, 30]);
        let cell = 2.0 / 35.0;
        assert_eq!(levels[0].depth_change_threshold, 2.0 * cell);
        assert_eq!(levels[0].filter_voxel_size, cell);
        assert_eq!(levels[0].filter_sigma, 0.5);
    }

    #[test]
    fn non_decreasing_boxes_are_rejected() {
        let mut cfg = PipelineConfig::<f64>::default();
        cfg.levels[1].box_scale = Some(1.0);
        assert!(matches!(cfg.resolve(1.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn identity_backend_adds_nothing() {
        let cloud = grid_cloud();
        let out = complete(&cloud, &IdentityBackend, &PipelineConfig::default()).unwrap();
        assert_eq!(out.cloud, cloud);
        assert_eq!(out.num_new_points(), 0);
        assert!(out.levels.iter().all(|l| !l.queries_from_new_points));
    }

    #[test]
    fn no_levels_is_identity() {
        let cloud = grid_cloud();
        let cfg = PipelineConfig { levels: vec![], ..PipelineConfig::default() };
        assert_eq!(complete(&cloud, &IdentityBackend, &cfg).unwrap().cloud, cloud);
    }

    #[test]
    fn zero_queries_is_an_error() {
        let cloud = grid_cloud();
        let level = LevelConfig::<f64>::standard(0).resolve(1.0).unwrap();
        assert!(matches!(run_level(&cloud, &IdentityBackend, &level, &[], 0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn config_round_trips_through_serde_defaults() {
        let cfg: PipelineConfig<f64> = serde_json_like_default();
        assert_eq!(cfg, PipelineConfig::default());
    }

    fn serde_json_like_default() -> PipelineConfig<f64> {
        // `#[serde(default)]` on every struct means an empty document is the default config.
        PipelineConfig::deserialize(serde::de::value::MapDeserializer::<_, serde::de::value::Error>::new(
            std::iter::empty::<(&str, f64)>(),
        ))
        .unwrap()
    }
}
