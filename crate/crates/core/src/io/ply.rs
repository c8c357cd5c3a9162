//! Minimal PLY support: the `vertex` element with `x y z [nx ny nz]`.
//!
//! Reads ASCII and binary (either endianness) files, skipping unknown
//! properties and elements. Writes little-endian binary with `double` fields.

use std::fmt::Write as _;

use super::assemble;
use crate::geometry::PointCloud;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    LittleEndian,
    BigEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Result<Self, String> {
        Ok(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(format!("unknown PLY type {other:?}")),
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, String> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or("missing end_header")?;
    let mut body_offset = end + END.len();
    // The header ends at the first newline after end_header (\n or \r\n).
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) == Some(&b'\n') {
        body_offset += 1;
    }
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| "PLY header is not ASCII")?;
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err("missing 'ply' magic".into());
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::LittleEndian,
                    "binary_big_endian" => Encoding::BigEndian,
                    other => return Err(format!("unsupported PLY format {other:?}")),
                });
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| format!("bad element count {count:?}"))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, _name] => {
                let element = elements.last_mut().ok_or("property before element")?;
                element.properties.push(Property::List {
                    count: ScalarType::parse(count)?,
                    item: ScalarType::parse(item)?,
                });
            }
            ["property", ty, name] => {
                let element = elements.last_mut().ok_or("property before element")?;
                element.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty: ScalarType::parse(ty)?,
                });
            }
            _ => return Err(format!("unrecognised header line {line:?}")),
        }
    }
    Ok(Header {
        encoding: encoding.ok_or("missing format line")?,
        elements,
        body_offset,
    })
}

struct BinaryCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    little: bool,
}

impl BinaryCursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], String> {
        let chunk = self
            .bytes
            .get(self.pos..self.pos + N)
            .ok_or("unexpected end of PLY body")?;
        self.pos += N;
        let mut out = [0u8; N];
        out.copy_from_slice(chunk);
        if !self.little {
            out.reverse();
        }
        Ok(out)
    }

    fn read(&mut self, ty: ScalarType) -> Result<f64, String> {
        Ok(match ty {
            ScalarType::I8 => i8::from_le_bytes(self.take()?) as f64,
            ScalarType::U8 => u8::from_le_bytes(self.take()?) as f64,
            ScalarType::I16 => i16::from_le_bytes(self.take()?) as f64,
            ScalarType::U16 => u16::from_le_bytes(self.take()?) as f64,
            ScalarType::I32 => i32::from_le_bytes(self.take()?) as f64,
            ScalarType::U32 => u32::from_le_bytes(self.take()?) as f64,
            ScalarType::F32 => f32::from_le_bytes(self.take()?) as f64,
            ScalarType::F64 => f64::from_le_bytes(self.take()?),
        })
    }

    fn skip(&mut self, n: usize) -> Result<(), String> {
        if self.pos + n > self.bytes.len() {
            return Err("unexpected end of PLY body".into());
        }
        self.pos += n;
        Ok(())
    }
}

/// Column positions of x, y, z and (optionally) nx, ny, nz in the vertex element.
fn vertex_columns(element: &Element) -> Result<([usize; 3], Option<[usize; 3]>), String> {
    let find = |wanted: &str| {
        element
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == wanted))
    };
    let xyz = [find("x"), find("y"), find("z")];
    let [Some(x), Some(y), Some(z)] = xyz else {
        return Err("vertex element lacks x, y or z".into());
    };
    let normals = match [find("nx"), find("ny"), find("nz")] {
        [Some(a), Some(b), Some(c)] => Some([a, b, c]),
        [None, None, None] => None,
        _ => return Err("vertex element has an incomplete normal triple".into()),
    };
    Ok(([x, y, z], normals))
}

pub fn read_ply<S: Scalar>(bytes: &[u8]) -> Result<PointCloud<S>, String> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or("no vertex element")?;
    let vertex = &header.elements[vertex_pos];
    let (xyz, nxyz) = vertex_columns(vertex)?;
    let mut rows = Vec::with_capacity(vertex.count);
    let mut normals = nxyz.map(|_| Vec::with_capacity(vertex.count));
    let mut record = vec![0.0f64; vertex.properties.len()];
    let mut push = |record: &[f64]| {
        rows.push([record[xyz[0]], record[xyz[1]], record[xyz[2]]]);
        if let (Some(cols), Some(ns)) = (nxyz, normals.as_mut()) {
            ns.push([record[cols[0]], record[cols[1]], record[cols[2]]]);
        }
    };

    let body = &bytes[header.body_offset..];
    match header.encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| "PLY body is not text")?;
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            for element in &header.elements[..=vertex_pos] {
                for _ in 0..element.count {
                    let line = lines.next().ok_or("unexpected end of PLY body")?;
                    if element.name != "vertex" {
                        continue;
                    }
                    let mut tokens = line.split_whitespace();
                    for (slot, prop) in record.iter_mut().zip(&element.properties) {
                        match prop {
                            Property::Scalar { .. } => {
                                let t = tokens.next().ok_or("short vertex line")?;
                                *slot = t.parse().map_err(|_| format!("bad number {t:?}"))?;
                            }
                            Property::List { .. } => {
                                let n: usize = tokens
                                    .next()
                                    .ok_or("short vertex line")?
                                    .parse()
                                    .map_err(|_| "bad list length")?;
                                for _ in 0..n {
                                    tokens.next().ok_or("short vertex line")?;
                                }
                            }
                        }
                    }
                    push(&record);
                }
            }
        }
        Encoding::LittleEndian | Encoding::BigEndian => {
            let mut cursor = BinaryCursor {
                bytes: body,
                pos: 0,
                little: header.encoding == Encoding::LittleEndian,
            };
            for element in &header.elements[..=vertex_pos] {
                let is_vertex = element.name == "vertex";
                for _ in 0..element.count {
                    for (slot, prop) in record.iter_mut().zip(&element.properties) {
                        match *prop {
                            Property::Scalar { ty, .. } => {
                                if is_vertex {
                                    *slot = cursor.read(ty)?;
                                } else {
                                    cursor.skip(ty.size())?;
                                }
                            }
                            Property::List { count, item } => {
                                let n = cursor.read(count)? as usize;
                                cursor.skip(n * item.size())?;
                            }
                        }
                    }
                    if is_vertex {
                        push(&record);
                    }
                }
            }
        }
    }
    assemble(rows, normals)
}

fn header_text(len: usize, normals: bool, format: &str, ty: &str) -> String {
    let mut h = String::new();
    writeln!(h, "ply").unwrap();
    writeln!(h, "format {format} 1.0").unwrap();
    writeln!(h, "element vertex {len}").unwrap();
    let names: &[&str] = if normals { &["x", "y", "z", "nx", "ny", "nz"] } else { &["x", "y", "z"] };
    for n in names {
        writeln!(h, "property {ty} {n}").unwrap();
    }
    writeln!(h, "end_header").unwrap();
    h
}

/// Little-endian binary PLY with `double` coordinates (and normals when present).
pub fn write_ply<S: Scalar>(cloud: &PointCloud<S>) -> Vec<u8> {
    let normals = cloud.normals();
    let mut out = header_text(cloud.len(), normals.is_some(), "binary_little_endian", "double").into_bytes();
    let stride = if normals.is_some() { 48 } else { 24 };
    out.reserve(cloud.len() * stride);
    for (i, p) in cloud.points().iter().enumerate() {
        for v in p.to_array() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        if let Some(ns) = normals {
            for v in ns[i].to_array() {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
    }
    out
}

/// ASCII PLY, mainly for inspection and interop tests.
pub fn write_ply_ascii<S: Scalar>(cloud: &PointCloud<S>) -> Vec<u8> {
    let normals = cloud.normals();
    let mut out = header_text(cloud.len(), normals.is_some(), "ascii", "double");
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z).unwrap();
        if let Some(ns) = normals {
            write!(out, " {} {} {}", ns[i].x, ns[i].y, ns[i].z).unwrap();
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point3, UnitVector3};

    #[test]
    fn binary_and_ascii_agree() {
        let cloud = PointCloud::with_normals(
            vec![Point3::new(0.5, -1.25, 3.0), Point3::new(0.1, 0.2, 0.3)],
            vec![UnitVector3::x_axis(), UnitVector3::z_axis()],
        )
        .unwrap();
        let a: PointCloud<f64> = read_ply(&write_ply(&cloud)).unwrap();
        let b: PointCloud<f64> = read_ply(&write_ply_ascii(&cloud)).unwrap();
        assert_eq!(a, cloud);
        assert_eq!(b, cloud);
    }

    #[test]
    fn reads_float_big_endian_with_extra_properties_and_faces() {
        let mut bytes = b"ply\nformat binary_big_endian 1.0\ncomment test\nelement vertex 2\n\
property float x\nproperty uchar red\nproperty float y\nproperty float z\n\
element face 1\nproperty list uchar int vertex_indices\nend_header\n"
            .to_vec();
        for (x, r, y, z) in [(1.0f32, 7u8, 2.0f32, 3.0f32), (-1.5, 9, 0.25, 8.0)] {
            bytes.extend_from_slice(&x.to_be_bytes());
            bytes.push(r);
            bytes.extend_from_slice(&y.to_be_bytes());
            bytes.extend_from_slice(&z.to_be_bytes());
        }
        bytes.push(3);
        for i in [0i32, 1, 1] {
            bytes.extend_from_slice(&i.to_be_bytes());
        }
        let c: PointCloud<f64> = read_ply(&bytes).unwrap();
        assert_eq!(c.points(), &[Point3::new(1.0, 2.0, 3.0), Point3::new(-1.5, 0.25, 8.0)]);
    }

    #[test]
    fn truncated_body_is_an_error() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)]).unwrap();
        let bytes = write_ply(&cloud);
        assert!(read_ply::<f64>(&bytes[..bytes.len() - 1]).is_err());
        assert!(read_ply::<f64>(b"plx\nend_header\n").is_err());
    }

    #[test]
    fn writing_is_deterministic() {
        let cloud = PointCloud::new(vec![Point3::new(1.0f32, 2.0, 3.0)]).unwrap();
        assert_eq!(write_ply(&cloud), write_ply(&cloud));
        let back: PointCloud<f32> = read_ply(&write_ply(&cloud)).unwrap();
        assert_eq!(back, cloud);
    }
}
