use std::fmt::Write as _;
use std::path::PathBuf;

use kaplan_core::metrics::{f1_score, hole_region_report, Region};
use kaplan_core::EvalReport;
use serde::Serialize;

use super::Globals;
use crate::error::{CliError, CliResult};
use crate::inputs::load_cloud;

/// Score a completed cloud against the ground truth.
#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Predicted (completed) cloud.
    #[arg(long)]
    pub pred: PathBuf,
    /// Complete ground-truth cloud.
    #[arg(long)]
    pub gt: PathBuf,
    /// Ground-truth points of the hole; adds a hole-only block.
    #[arg(long)]
    pub missing: Option<PathBuf>,
    /// F1 distance threshold.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
pub struct EvalOutput {
    pub version: String,
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub missing: Option<PathBuf>,
    pub threshold: f64,
    pub global: EvalReport,
    pub hole_only: Option<EvalReport>,
}

pub fn run(args: &EvalArgs, _globals: &Globals) -> CliResult<EvalOutput> {
    if !(args.threshold > 0.0 && args.threshold.is_finite()) {
        return Err(CliError::usage("--threshold must be positive"));
    }
    let pred = load_cloud(&args.pred)?.without_normals();
    let gt = load_cloud(&args.gt)?.without_normals();
    let missing = args.missing.as_deref().map(load_cloud).transpose()?;
    let global = f1_score(&pred, &gt, args.threshold)?;
    let hole_only = missing.map(|m| hole_region_report(&pred, &gt, &m.without_normals(), args.threshold)).transpose()?;
    let out = EvalOutput {
        version: env!("CARGO_PKG_VERSION").into(),
        pred: args.pred.clone(),
        gt: args.gt.clone(),
        missing: args.missing.clone(),
        threshold: args.threshold,
        global,
        hole_only,
    };
    let json = serde_json::to_string_pretty(&out).map_err(CliError::runtime)?;
    if let Some(path) = &args.output {
        std::fs::write(path, format!("{json}\n")).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{}", table(&out));
    }
    Ok(out)
}

/// Aligned text table; Chamfer distances are scaled by 10^3.
pub fn table(out: &EvalOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "threshold {}", out.threshold);
    let _ = writeln!(
        s,
        "{:<10} {:>9} | {:>6} {:>8} {:>8} {:>8} {:>8}",
        "region", "10^3*CD", "F1", "acc", "comp", "n_pred", "n_gt"
    );
    for r in std::iter::once(&out.global).chain(&out.hole_only) {
        let region = match r.region {
            Region::Global => "global",
            Region::HoleOnly => "hole_only",
        };
        let cd = r.chamfer.map_or_else(|| "-".to_string(), |c| format!("{:.3}", 1e3 * c));
        let _ = writeln!(
            s,
            "{:<10} {:>9} | {:>6.2} {:>8.2} {:>8.2} {:>8} {:>8}",
            region, cd, r.f1, r.accuracy, r.completeness, r.num_pred, r.num_gt
        );
    }
    s
}
