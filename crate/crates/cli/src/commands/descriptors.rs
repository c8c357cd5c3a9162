use std::path::PathBuf;

use kaplan_core::backend::{CompletionBackend, GtOracleBackend};
use kaplan_core::completion::select_query_points;
use kaplan_core::descriptor::format::write_descriptor;
use kaplan_core::descriptor::DescriptorBuilder;
use kaplan_core::{KaplanConfig, Point3};
use rayon::prelude::*;
use serde::Serialize;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::inputs::{create_dir, load_cloud, load_cloud_with_normals, load_config};
use crate::manifest::RunManifest;

/// Export descriptors as .kpln files, optionally paired with ground-truth targets.
#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("queries_from").required(true).args(["count", "queries"])))]
pub struct DescriptorsArgs {
    /// Point cloud the descriptors are built on.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of query points, chosen by farthest-point sampling.
    #[arg(long)]
    pub count: Option<usize>,
    /// Explicit query points (.xyz or .ply); planes are centred exactly on them.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Descriptor configuration (TOML, or JSON); the defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Complete cloud; also writes `<name>.gt.kpln` targets built on the same planes.
    #[arg(long)]
    pub complete: Option<PathBuf>,
    /// Estimate normals from this many neighbours when the input has none.
    #[arg(long)]
    pub estimate_normals: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Exported {
    query: Point3,
    input: PathBuf,
    target: Option<PathBuf>,
    valid_cells: usize,
}

pub fn run(args: &DescriptorsArgs, globals: &Globals) -> CliResult<RunManifest> {
    let mut cfg: KaplanConfig = load_config(args.config.as_deref())?;
    let seed = globals.seed.unwrap_or(0);
    if let Some(s) = globals.seed {
        cfg.rng_seed = s;
    }
    cfg.validate()?;
    let mut manifest = RunManifest::new("descriptors");
    manifest.config(&cfg)?;
    manifest.seed("queries", seed);
    manifest.seed("planes", cfg.rng_seed);
    manifest.input("input", &args.input);

    let cloud = manifest.timed("read", || load_cloud_with_normals(&args.input, args.estimate_normals))?;
    let queries = match (&args.queries, args.count) {
        (Some(path), _) => {
            manifest.input("queries", path);
            load_cloud(path)?.points().to_vec()
        }
        (None, Some(0)) => return Err(CliError::usage("--count must be at least 1")),
        (None, Some(n)) => manifest.timed("queries", || select_query_points(&cloud, n, seed)),
        (None, None) => unreachable!("clap requires --count or --queries"),
    };
    if queries.len() < args.count.unwrap_or(0) {
        log::warn!("only {} distinct query points available", queries.len());
    }
    let oracle = match &args.complete {
        Some(path) => {
            manifest.input("complete", path);
            Some(GtOracleBackend::new(load_cloud(path)?, cfg))
        }
        None => None,
    };

    create_dir(&args.out_dir)?;
    let builder = DescriptorBuilder::new(&cloud);
    let exported = manifest.timed("export", || {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, &q)| -> CliResult<Exported> {
                let k0 = builder.build(q, i, &cfg)?;
                let input = args.out_dir.join(format!("query_{i:05}.kpln"));
                write_descriptor(&input, &k0).map_err(|e| CliError::runtime(format!("{}: {e}", input.display())))?;
                let target = match &oracle {
                    Some(o) => {
                        let gt = o.predict(&k0).map_err(|e| CliError::runtime(format!("query {i}: {e}")))?;
                        let path = args.out_dir.join(format!("query_{i:05}.gt.kpln"));
                        write_descriptor(&path, &gt).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
                        Some(path)
                    }
                    None => None,
                };
                Ok(Exported { query: q, input, target, valid_cells: k0.count_valid(0.5) })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    manifest.result("descriptors", &exported)?;
    let path = args.out_dir.join("manifest.json");
    manifest.output("manifest", &path);
    manifest.write(&path)?;
    Ok(manifest)
}
