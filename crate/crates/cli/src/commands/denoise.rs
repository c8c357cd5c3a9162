use std::path::PathBuf;

use kaplan_core::completion::denoise;
use kaplan_core::KaplanConfig;
use serde::Serialize;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::inputs::{load_cloud_with_normals, load_config, save_cloud, BackendArgs};
use crate::manifest::{sidecar_path, RunManifest};

/// Move every point onto the surface the backend predicts around it.
#[derive(Debug, clap::Args)]
pub struct DenoiseArgs {
    /// Noisy point cloud (.ply or .xyz).
    #[arg(long)]
    pub input: PathBuf,
    /// Denoised cloud to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Descriptor configuration (TOML, or JSON); `side_length` is absolute.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Output cells at or above this valid flag count as filled.
    #[arg(long, default_value_t = 0.5)]
    pub valid_threshold: f64,
    /// Estimate normals from this many neighbours when the input has none.
    #[arg(long)]
    pub estimate_normals: Option<usize>,
    /// Where to write the run manifest (default: next to the output).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Config {
    kaplan: KaplanConfig,
    valid_threshold: f64,
}

pub fn run(args: &DenoiseArgs, globals: &Globals) -> CliResult<RunManifest> {
    let mut kaplan: KaplanConfig = load_config(args.config.as_deref())?;
    if let Some(seed) = globals.seed {
        kaplan.rng_seed = seed;
    }
    kaplan.validate()?;
    if !(args.valid_threshold > 0.0 && args.valid_threshold <= 1.0) {
        return Err(CliError::usage("--valid-threshold must lie in (0, 1]"));
    }
    let mut manifest = RunManifest::new("denoise");
    manifest.config(&Config { kaplan, valid_threshold: args.valid_threshold })?;
    manifest.seed("planes", kaplan.rng_seed);
    manifest.input("input", &args.input);

    let cloud = manifest.timed("read", || load_cloud_with_normals(&args.input, args.estimate_normals))?;
    let (backend, _) = manifest.timed("backend", || args.backend.build(&kaplan))?;
    manifest.result("backend", &backend.name())?;
    let denoised = manifest.timed("denoise", || denoise(&cloud, backend.as_ref(), &kaplan, args.valid_threshold))?;
    manifest.timed("write", || save_cloud(&args.output, &denoised))?;
    manifest.output("output", &args.output);

    let moved = cloud.points().iter().zip(denoised.points()).filter(|(a, b)| a != b).count();
    let mean_shift =
        cloud.points().iter().zip(denoised.points()).map(|(a, b)| a.distance(*b)).sum::<f64>() / cloud.len() as f64;
    manifest.result("points", &cloud.len())?;
    manifest.result("moved_points", &moved)?;
    manifest.result("mean_shift", &mean_shift)?;

    let path = args.manifest.clone().unwrap_or_else(|| sidecar_path(&args.output));
    manifest.output("manifest", &path);
    manifest.write(&path)?;
    Ok(manifest)
}
