//! Reading and writing point clouds as ASCII XYZ or PLY.

mod ply;
mod xyz;

use std::path::Path;

pub use ply::{read_ply, write_ply, write_ply_ascii};
pub use xyz::{read_xyz, write_xyz};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, UnitVector3};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Xyz,
}

impl CloudFormat {
    /// Format implied by a file extension (`.ply`, `.xyz`, `.txt`, `.pts`).
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ply" => Some(Self::Ply),
            "xyz" | "txt" | "pts" => Some(Self::Xyz),
            _ => None,
        }
    }
}

fn format_for(path: &Path) -> Result<CloudFormat> {
    CloudFormat::from_path(path).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        message: "unknown point cloud extension (expected .ply or .xyz)".into(),
    })
}

pub fn read_cloud<S: Scalar>(path: &Path) -> Result<PointCloud<S>> {
    let bytes = std::fs::read(path)?;
    let parsed = match format_for(path)? {
        CloudFormat::Ply => read_ply(&bytes),
        CloudFormat::Xyz => read_xyz(&bytes),
    };
    parsed.map_err(|message| Error::Parse { path: path.to_path_buf(), message })
}

pub fn write_cloud<S: Scalar>(path: &Path, cloud: &PointCloud<S>) -> Result<()> {
    let bytes = match format_for(path)? {
        CloudFormat::Ply => write_ply(cloud),
        CloudFormat::Xyz => write_xyz(cloud),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Assembles a cloud from parsed rows, renormalizing normals that are not unit length
/// to rounding precision. Unit normals are kept bit for bit, so read-write round trips
/// reproduce the file.
fn assemble<S: Scalar>(
    rows: Vec<[f64; 3]>,
    normals: Option<Vec<[f64; 3]>>,
) -> std::result::Result<PointCloud<S>, String> {
    let points: Vec<Point3<S>> = rows
        .iter()
        .map(|r| Point3::new(S::lit(r[0]), S::lit(r[1]), S::lit(r[2])))
        .collect();
    let cloud = match normals {
        None => PointCloud::new(points),
        Some(ns) => {
            let units = ns
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let v = Point3::new(S::lit(n[0]), S::lit(n[1]), S::lit(n[2]));
                    if (v.norm_squared() - S::one()).abs() <= S::lit(4.0) * S::epsilon() {
                        return Ok(UnitVector3::new_unchecked(v));
                    }
                    UnitVector3::new(v)
                        .ok_or_else(|| format!("zero-length normal at point {i}"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            PointCloud::with_normals(points, units)
        }
    };
    cloud.map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(with_normals: bool) -> PointCloud<f64> {
        let pts = vec![
            Point3::new(0.1, -2.5, 3.0),
            Point3::new(1.0 / 3.0, 1e-17, -7.25),
            Point3::new(123456.789, 0.0, -0.0),
        ];
        if with_normals {
            let ns = vec![
                UnitVector3::z_axis(),
                UnitVector3::new(Point3::new(1.0, 1.0, 0.0)).unwrap(),
                UnitVector3::x_axis(),
            ];
            PointCloud::with_normals(pts, ns).unwrap()
        } else {
            PointCloud::new(pts).unwrap()
        }
    }

    #[test]
    fn files_round_trip_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.ply", "b.xyz"] {
            for normals in [false, true] {
                let path = dir.path().join(name);
                let cloud = sample(normals);
                write_cloud(&path, &cloud).unwrap();
                let back: PointCloud<f64> = read_cloud(&path).unwrap();
                assert_eq!(back.points(), cloud.points());
                assert_eq!(back.has_normals(), normals);
            }
        }
    }

    #[test]
    fn unit_normals_survive_rewrites_bit_for_bit() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<_> = (0..200).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        let ns = (0..200)
            .map(|_| UnitVector3::new(Point3::new(rng.random_range(-1.0..1.0), rng.random(), rng.random())).unwrap())
            .collect();
        let cloud = PointCloud::with_normals(pts, ns).unwrap();
        let bytes = write_ply(&cloud);
        let back: PointCloud<f64> = read_ply(&bytes).unwrap();
        assert_eq!(back, cloud);
        assert_eq!(write_ply(&back), bytes);
    }

    #[test]
    fn off_unit_normals_are_renormalized() {
        let back: PointCloud<f64> = read_xyz(b"0 0 0 0 0 2\n").unwrap();
        assert_eq!(*back.normals().unwrap()[0], Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn unknown_extension_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.obj");
        assert!(matches!(write_cloud(&path, &sample(false)), Err(Error::Parse { .. })));
    }
}
