//! Loading clouds, configuration files and backend specs.

use std::path::{Path, PathBuf};
use std::time::Duration;

use kaplan_core::backend::{CompletionBackend, ExternalBackend, GtOracleBackend, IdentityBackend};
use kaplan_core::io::{read_cloud, write_cloud};
use kaplan_core::normals::estimate_normals;
use kaplan_core::{Error, KaplanConfig, PointCloud, Real};
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// Reads a non-empty cloud; any failure is the caller's fault.
pub fn load_cloud(path: &Path) -> CliResult<PointCloud> {
    let cloud: PointCloud = read_cloud(path).map_err(|e| match e {
        Error::Parse { .. } => CliError::usage(e),
        _ => CliError::usage(format!("{}: {e}", path.display())),
    })?;
    if cloud.is_empty() {
        return Err(CliError::usage(format!("{}: the point cloud is empty", path.display())));
    }
    Ok(cloud)
}

/// Like [`load_cloud`], estimating normals from `k` neighbours when the file has none.
pub fn load_cloud_with_normals(path: &Path, estimate_k: Option<usize>) -> CliResult<PointCloud> {
    let cloud = load_cloud(path)?;
    match estimate_k {
        Some(k) if !cloud.has_normals() => {
            let est = estimate_normals(&cloud, k)?;
            if !est.degenerate.is_empty() {
                log::warn!("{}: {} points had degenerate neighbourhoods", path.display(), est.degenerate.len());
            }
            Ok(est.cloud)
        }
        _ => Ok(cloud),
    }
}

pub fn save_cloud(path: &Path, cloud: &PointCloud) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_cloud(path, cloud).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))
}

/// Parses a TOML configuration, or JSON when the file ends in `.json` or is not valid TOML.
/// Without a path the defaults are used.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string()).or_else(|toml_err| {
            serde_json::from_str(&text).map_err(|_| toml_err)
        })
    };
    parsed.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// A completion backend named on the command line:
/// `identity`, `gt-oracle:<complete cloud>` or `external:<command line>`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Identity,
    GtOracle(PathBuf),
    External(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "identity" {
            return Ok(Self::Identity);
        }
        match s.split_once(':') {
            Some(("gt-oracle", path)) if !path.is_empty() => Ok(Self::GtOracle(path.into())),
            Some(("external", cmd)) if !cmd.trim().is_empty() => Ok(Self::External(cmd.into())),
            _ => Err(format!("unknown backend '{s}' (expected identity, gt-oracle:<ply> or external:<command>)")),
        }
    }
}

/// Options shared by the commands that call a backend.
#[derive(Debug, Clone, clap::Args)]
pub struct BackendArgs {
    /// identity | gt-oracle:<complete cloud> | external:<command line>
    #[arg(long, default_value = "identity")]
    pub backend: BackendSpec,
    /// Per-call timeout of an external backend, in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub backend_timeout: f64,
    /// Directory for the descriptor files exchanged with an external backend.
    #[arg(long)]
    pub backend_io_dir: Option<PathBuf>,
    /// Keep the exchanged descriptor files.
    #[arg(long)]
    pub keep_backend_files: bool,
}

impl BackendArgs {
    /// Instantiates the backend; `config` sets the ground-truth oracle's aggregation parameters.
    pub fn build(&self, config: &KaplanConfig) -> CliResult<(Box<dyn CompletionBackend<Real>>, Option<PointCloud>)> {
        Ok(match &self.backend {
            BackendSpec::Identity => (Box::new(IdentityBackend), None),
            BackendSpec::GtOracle(path) => {
                let complete = load_cloud(path)?;
                (Box::new(GtOracleBackend::new(complete.clone(), *config)), Some(complete))
            }
            BackendSpec::External(cmd) => {
                if !(self.backend_timeout > 0.0 && self.backend_timeout.is_finite()) {
                    return Err(CliError::usage("--backend-timeout must be positive"));
                }
                let dir = self.backend_io_dir.clone().unwrap_or_else(std::env::temp_dir);
                create_dir(&dir)?;
                let backend = ExternalBackend::from_command_line(cmd, dir)
                    .ok_or_else(|| CliError::usage("empty external backend command"))?
                    .with_timeout(Duration::from_secs_f64(self.backend_timeout))
                    .keep_files(self.keep_backend_files);
                (Box::new(backend), None)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_backend_specs() {
        assert_eq!("identity".parse(), Ok(BackendSpec::Identity));
        assert_eq!("gt-oracle:a/b.ply".parse(), Ok(BackendSpec::GtOracle("a/b.ply".into())));
        assert_eq!("external:python serve.py --x".parse(), Ok(BackendSpec::External("python serve.py --x".into())));
        assert!("gt-oracle:".parse::<BackendSpec>().is_err());
        assert!("oracle".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn reads_toml_and_json_configs() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("c.toml");
        std::fs::write(&toml_path, "resolution = 21\nnum_planes = 9\n").unwrap();
        let c: KaplanConfig = load_config(Some(&toml_path)).unwrap();
        assert_eq!((c.resolution, c.num_planes), (21, 9));
        let json_path = dir.path().join("c.cfg");
        std::fs::write(&json_path, r#"{"resolution": 15}"#).unwrap();
        let c: KaplanConfig = load_config(Some(&json_path)).unwrap();
        assert_eq!(c.resolution, 15);
        std::fs::write(&json_path, "resolution = [").unwrap();
        assert!(matches!(load_config::<KaplanConfig>(Some(&json_path)), Err(CliError::Usage(_))));
        assert!(matches!(load_config::<KaplanConfig>(Some(&dir.path().join("none.toml"))), Err(CliError::Usage(_))));
    }
}
