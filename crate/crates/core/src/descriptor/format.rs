//! `.kpln` binary descriptor files (little-endian).
//!
//! ```text
//! "KPLN"  version:u32  K:u32  R:u32  C:u32 (= 5)
//! query: 3 x f64
//! K x { origin: 3 x f64, u: 3 x f64, v: 3 x f64, w: 3 x f64, side: f64 }
//! K x 5 x R x R f32   plane-major, channels [depth, valid, nx, ny, nz], row-major
//! ```

use std::path::Path;

use thiserror::Error;

use super::{ChannelImage, DescriptorPlane, KaplanDescriptor, PlaneFrame, CHANNELS};
use crate::geometry::{Point3, UnitVector3};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"KPLN";
pub const VERSION: u32 = 1;

const HEADER_BYTES: usize = 4 + 4 * 4 + 3 * 8;
const FRAME_BYTES: usize = 13 * 8;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic (not a .kpln file)")]
    BadMagic,
    #[error("unsupported .kpln version {0}")]
    UnsupportedVersion(u32),
    #[error("expected {CHANNELS} channels per plane, found {0}")]
    ChannelCount(u32),
    #[error("file is {actual} bytes, layout requires {expected}")]
    Length { expected: usize, actual: usize },
    #[error("invalid descriptor: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serializes a descriptor. Channel values are stored as `f32`.
pub fn encode<S: Scalar>(descriptor: &KaplanDescriptor<S>) -> Vec<u8> {
    let k = descriptor.num_planes();
    let r = descriptor.resolution();
    let mut out = Vec::with_capacity(HEADER_BYTES + k * (FRAME_BYTES + CHANNELS * r * r * 4));
    out.extend_from_slice(MAGIC);
    for v in [VERSION, k as u32, r as u32, CHANNELS as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let f64s = |out: &mut Vec<u8>, vals: &[S]| {
        for v in vals {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    };
    f64s(&mut out, &descriptor.query.to_array());
    for plane in &descriptor.planes {
        let f = &plane.frame;
        f64s(&mut out, &f.origin.to_array());
        f64s(&mut out, &f.u_axis.to_array());
        f64s(&mut out, &f.v_axis.to_array());
        f64s(&mut out, &f.w_axis.to_array());
        f64s(&mut out, &[f.side_length]);
    }
    for plane in &descriptor.planes {
        for channel in &plane.channels {
            for v in channel.values() {
                out.extend_from_slice(&v.as_f32().to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.bytes[self.pos..self.pos + N]);
        self.pos += N;
        b
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }

    fn point<S: Scalar>(&mut self) -> Point3<S> {
        Point3::new(S::lit(self.f64()), S::lit(self.f64()), S::lit(self.f64()))
    }
}

/// Parses and validates a descriptor. `query_index` is set to 0.
pub fn decode<S: Scalar>(bytes: &[u8]) -> Result<KaplanDescriptor<S>, FormatError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < HEADER_BYTES {
        return Err(FormatError::Length { expected: HEADER_BYTES, actual: bytes.len() });
    }
    let mut rd = Reader { bytes, pos: 4 };
    let version = rd.u32();
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let k = rd.u32() as usize;
    let r = rd.u32() as usize;
    let c = rd.u32();
    if c as usize != CHANNELS {
        return Err(FormatError::ChannelCount(c));
    }
    if k == 0 {
        return Err(FormatError::Invalid("descriptor has no planes".into()));
    }
    super::check_resolution(r).map_err(|e| FormatError::Invalid(e.to_string()))?;
    let expected = k
        .checked_mul(r * r * CHANNELS * 4 + FRAME_BYTES)
        .and_then(|body| body.checked_add(HEADER_BYTES))
        .ok_or_else(|| FormatError::Invalid("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(FormatError::Length { expected, actual: bytes.len() });
    }

    let query: Point3<S> = rd.point();
    let mut frames = Vec::with_capacity(k);
    for _ in 0..k {
        let origin = rd.point();
        let u = UnitVector3::new_unchecked(rd.point());
        let v = UnitVector3::new_unchecked(rd.point());
        let w = UnitVector3::new_unchecked(rd.point());
        let side = S::lit(rd.f64());
        let frame = PlaneFrame { origin, u_axis: u, v_axis: v, w_axis: w, side_length: side, resolution: r };
        frame.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;
        frames.push(frame);
    }
    if !query.is_finite() {
        return Err(FormatError::Invalid("non-finite query point".into()));
    }
    let mut planes = Vec::with_capacity(k);
    for frame in frames {
        let channels: [ChannelImage<S>; CHANNELS] = std::array::from_fn(|_| {
            let values = (0..r * r).map(|_| S::lit(f64::from(rd.f32()))).collect();
            ChannelImage::from_values(r, values).expect("length matches resolution")
        });
        if channels.iter().any(|c| c.values().iter().any(|v| !v.is_finite())) {
            return Err(FormatError::Invalid("non-finite channel value".into()));
        }
        planes.push(DescriptorPlane { frame, channels });
    }
    Ok(KaplanDescriptor { query, query_index: 0, planes })
}

pub fn write_descriptor<S: Scalar>(path: &Path, descriptor: &KaplanDescriptor<S>) -> Result<(), FormatError> {
    std::fs::write(path, encode(descriptor))?;
    Ok(())
}

pub fn read_descriptor<S: Scalar>(path: &Path) -> Result<KaplanDescriptor<S>, FormatError> {
    decode(&std::fs::read(path)?)
}
