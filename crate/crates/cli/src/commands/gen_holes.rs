use std::path::PathBuf;

use kaplan_core::datagen::{build_level_hierarchy, synthesize_hole, HoleSpec};
use serde::Serialize;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::inputs::{create_dir, load_cloud, save_cloud};
use crate::manifest::RunManifest;

/// Cut holes into a complete cloud and write coarse-to-fine training levels.
#[derive(Debug, clap::Args)]
pub struct GenHolesArgs {
    /// Complete point cloud (.ply or .xyz).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Fraction of the (remaining) points each hole removes, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,
    /// Number of holes, cut one after the other.
    #[arg(long, default_value_t = 1)]
    pub holes: usize,
    /// Index of the first hole's centre; drawn from the seed when absent.
    #[arg(long)]
    pub center_index: Option<usize>,
    /// Level subsampling ratios from coarse to fine, ending at 1.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Config<'a> {
    fraction: f64,
    holes: usize,
    center_index: Option<usize>,
    ratios: &'a [f64],
}

#[derive(Debug, Serialize)]
struct HoleRecord {
    seed: u64,
    /// Index into the cloud the hole was cut from (the input for the first hole).
    center_index: usize,
    removed: usize,
}

#[derive(Debug, Serialize)]
struct LevelRecord {
    level_id: usize,
    ratio: f64,
    incomplete: usize,
    missing: usize,
}

pub fn run(args: &GenHolesArgs, globals: &Globals) -> CliResult<RunManifest> {
    if !(args.fraction > 0.0 && args.fraction < 1.0) {
        return Err(CliError::usage(format!("--fraction must lie in (0, 1), got {}", args.fraction)));
    }
    if args.holes == 0 {
        return Err(CliError::usage("--holes must be at least 1"));
    }
    let seed = globals.seed.unwrap_or(0);
    let mut manifest = RunManifest::new("gen-holes");
    manifest.config(&Config { fraction: args.fraction, holes: args.holes, center_index: args.center_index, ratios: &args.ratios })?;
    manifest.seed("seed", seed);
    manifest.input("input", &args.input);

    let cloud = manifest.timed("read", || load_cloud(&args.input))?;
    let (incomplete, missing, holes) = manifest.timed("holes", || -> CliResult<_> {
        let mut holes = Vec::with_capacity(args.holes);
        let mut incomplete = cloud.clone();
        let mut missing: Option<kaplan_core::PointCloud> = None;
        for h in 0..args.holes {
            let spec = HoleSpec {
                fraction: args.fraction,
                center_index: if h == 0 { args.center_index } else { None },
                seed: seed.wrapping_add(h as u64),
            };
            let split = synthesize_hole(&incomplete, &spec)?;
            holes.push(HoleRecord { seed: spec.seed, center_index: split.center_index, removed: split.missing.len() });
            match missing.as_mut() {
                None => missing = Some(split.missing),
                Some(m) => {
                    let (pts, ns) = split.missing.into_parts();
                    m.extend(&pts, ns.as_deref())?;
                }
            }
            incomplete = split.incomplete;
        }
        Ok((incomplete, missing.expect("at least one hole"), holes))
    })?;
    let levels = manifest.timed("levels", || build_level_hierarchy(&incomplete, &missing, &args.ratios, seed))?;

    let written = manifest.timed("write", || -> CliResult<Vec<(String, PathBuf)>> {
        create_dir(&args.output_dir)?;
        let mut written = Vec::new();
        for (name, c) in [("incomplete", &incomplete), ("missing", &missing)] {
            let path = args.output_dir.join(format!("{name}.ply"));
            save_cloud(&path, c)?;
            written.push((name.to_string(), path));
        }
        for level in &levels {
            let dir = args.output_dir.join(format!("level_{}", level.level_id));
            for (name, c) in [("incomplete", &level.incomplete), ("missing", &level.missing), ("complete", &level.complete)] {
                let path = dir.join(format!("{name}.ply"));
                save_cloud(&path, c)?;
                written.push((format!("level_{}/{name}", level.level_id), path));
            }
        }
        Ok(written)
    })?;
    for (name, path) in &written {
        manifest.output(name, path);
    }

    let level_records: Vec<_> = levels
        .iter()
        .zip(&args.ratios)
        .map(|(l, &ratio)| LevelRecord { level_id: l.level_id, ratio, incomplete: l.incomplete.len(), missing: l.missing.len() })
        .collect();
    manifest.result("input_points", &cloud.len())?;
    manifest.result("holes", &holes)?;
    manifest.result("levels", &level_records)?;
    let path = args.output_dir.join("manifest.json");
    manifest.output("manifest", &path);
    manifest.write(&path)?;
    log::info!("{} points -> {} kept, {} removed", cloud.len(), incomplete.len(), missing.len());
    Ok(manifest)
}
