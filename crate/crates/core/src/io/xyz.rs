use std::fmt::Write as _;

use super::assemble;
use crate::geometry::PointCloud;
use crate::scalar::Scalar;

/// Parses `x y z [nx ny nz]` lines. Blank lines and `#` comments are skipped;
/// commas are accepted as separators.
pub fn read_xyz<S: Scalar>(bytes: &[u8]) -> Result<PointCloud<S>, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("not UTF-8 text: {e}"))?;
    let mut rows = Vec::new();
    let mut normals = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != 3 && values.len() != 6 {
            return Err(format!("line {}: expected 3 or 6 values, got {}", lineno + 1, values.len()));
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(format!("line {}: inconsistent column count", lineno + 1));
        }
        rows.push([values[0], values[1], values[2]]);
        if values.len() == 6 {
            normals.push([values[3], values[4], values[5]]);
        }
    }
    assemble(rows, (width == Some(6)).then_some(normals))
}

/// Writes one point per line using the shortest exact decimal representation.
pub fn write_xyz<S: Scalar>(cloud: &PointCloud<S>) -> Vec<u8> {
    let mut out = String::with_capacity(cloud.len() * 48);
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z).expect("writing to a String");
        if let Some(ns) = cloud.normals() {
            let n = ns[i];
            write!(out, " {} {} {}", n.x, n.y, n.z).expect("writing to a String");
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators_and_comments() {
        let c: PointCloud<f64> = read_xyz(b"# header\n1 2 3\n\n4,5,6\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1].z, 6.0);
        assert!(!c.has_normals());
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(read_xyz::<f64>(b"1 2 3\n1 2 3 0 0 1\n").is_err());
        assert!(read_xyz::<f64>(b"1 2\n").is_err());
        assert!(read_xyz::<f64>(b"1 2 x\n").is_err());
    }

    #[test]
    fn normals_are_renormalized() {
        let c: PointCloud<f64> = read_xyz(b"0 0 0 0 0 2\n").unwrap();
        assert_eq!(c.normals().unwrap()[0].z, 1.0);
    }
}
