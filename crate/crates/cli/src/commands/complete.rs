use std::path::PathBuf;

use kaplan_core::completion::complete;
use kaplan_core::metrics::{f1_score, hole_region_report};
use kaplan_core::PipelineConfig;
use serde::Serialize;

use super::Globals;
use crate::error::CliResult;
use crate::inputs::{load_cloud, load_cloud_with_normals, load_config, save_cloud, BackendArgs};
use crate::manifest::{sidecar_path, RunManifest};

/// Complete a partial cloud, coarse to fine.
#[derive(Debug, clap::Args)]
pub struct CompleteArgs {
    /// Incomplete point cloud (.ply or .xyz).
    #[arg(long)]
    pub input: PathBuf,
    /// Completed cloud to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Pipeline configuration (TOML, or JSON); the defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Estimate normals from this many neighbours when the input has none.
    #[arg(long)]
    pub estimate_normals: Option<usize>,
    /// Points cut from the input; enables the hole-only evaluation.
    #[arg(long)]
    pub missing: Option<PathBuf>,
    /// Complete ground truth for the evaluation. Defaults to the oracle's cloud,
    /// or to the input plus the missing points.
    #[arg(long, requires = "missing")]
    pub gt: Option<PathBuf>,
    /// F1 distance threshold.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Where to write the run manifest (default: next to the output).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct LevelResult {
    level_id: usize,
    side_length: f64,
    queries: usize,
    queries_from_new_points: bool,
    records: usize,
    new_points: usize,
    seconds: f64,
}

pub fn run(args: &CompleteArgs, globals: &Globals) -> CliResult<RunManifest> {
    let mut cfg: PipelineConfig = load_config(args.config.as_deref())?;
    if let Some(seed) = globals.seed {
        cfg.rng_seed = seed;
    }
    let mut manifest = RunManifest::new("complete");
    manifest.config(&cfg)?;
    manifest.seed("rng_seed", cfg.rng_seed);
    for level in &cfg.levels {
        manifest.seed(&format!("level_{}_planes", level.level_id), level.kaplan.rng_seed);
    }
    manifest.input("input", &args.input);
    if let Some(config) = &args.config {
        manifest.input("config", config);
    }

    let cloud = manifest.timed("read", || load_cloud_with_normals(&args.input, args.estimate_normals))?;
    let extent = cloud.bounding_box().expect("non-empty").max_extent();
    cfg.resolve(extent)?;
    let oracle_config = cfg.levels.first().map(|l| l.kaplan).unwrap_or_default();
    let (backend, oracle_cloud) = manifest.timed("backend", || args.backend.build(&oracle_config))?;
    manifest.result("backend", &backend.name())?;

    let completion = manifest.timed("complete", || complete(&cloud, backend.as_ref(), &cfg))?;
    manifest.timed("write", || save_cloud(&args.output, &completion.cloud))?;
    manifest.output("output", &args.output);

    let levels: Vec<_> = completion
        .levels
        .iter()
        .map(|l| LevelResult {
            level_id: l.level.level_id,
            side_length: l.level.kaplan.side_length,
            queries: l.queries.len(),
            queries_from_new_points: l.queries_from_new_points,
            records: l.num_records,
            new_points: l.new_points.len(),
            seconds: l.seconds,
        })
        .collect();
    manifest.result("input_points", &cloud.len())?;
    manifest.result("output_points", &completion.cloud.len())?;
    manifest.result("levels", &levels)?;

    if let Some(missing_path) = &args.missing {
        manifest.input("missing", missing_path);
        let missing = load_cloud(missing_path)?.without_normals();
        let gt = match (&args.gt, oracle_cloud) {
            (Some(path), _) => {
                manifest.input("gt", path);
                load_cloud(path)?.without_normals()
            }
            (None, Some(oracle)) => oracle.without_normals(),
            (None, None) => {
                let mut gt = cloud.without_normals();
                gt.extend(missing.points(), None)?;
                gt
            }
        };
        let pred = completion.cloud.without_normals();
        let (global, hole) = manifest.timed("evaluate", || -> CliResult<_> {
            Ok((f1_score(&pred, &gt, args.threshold)?, hole_region_report(&pred, &gt, &missing, args.threshold)?))
        })?;
        log::info!("hole-only F1 {:.2}, global F1 {:.2}", hole.f1, global.f1);
        manifest.result("global", &global)?;
        manifest.result("hole_only", &hole)?;
    }

    let path = args.manifest.clone().unwrap_or_else(|| sidecar_path(&args.output));
    manifest.output("manifest", &path);
    manifest.write(&path)?;
    Ok(manifest)
}
