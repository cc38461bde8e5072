//! VXG1: 16-byte header (`b"VXG1"`, u32 version, 8 reserved bytes), then
//! `nx, ny, nz` as u32, origin and spacing as f64, then `nx·ny·nz` f32
//! values in x-fastest order. Everything little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Vec3, VoxelGrid};

pub const VXG_MAGIC: &[u8; 4] = b"VXG1";
pub const VXG_VERSION: u32 = 1;

/// Unvalidated VXG1 payload. Depth buffers use this form since they hold
/// values outside [0, 1] (and `+inf` for empty pixels).
#[derive(Debug, Clone, PartialEq)]
pub struct RawVolume {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: Vec3,
    pub values: Vec<f32>,
}

fn err(msg: impl Into<String>) -> Error {
    Error::format("VXG1", msg)
}

pub fn write_vxg_raw<W: Write>(mut w: W, vol: &RawVolume) -> Result<()> {
    let n: usize = vol.dims.iter().product();
    if n != vol.values.len() {
        return Err(Error::DimMismatch(format!("{n} cells but {} values", vol.values.len())));
    }
    let mut buf = Vec::with_capacity(76 + 4 * n);
    buf.extend_from_slice(VXG_MAGIC);
    buf.extend_from_slice(&VXG_VERSION.to_le_bytes());
    buf.extend_from_slice(&[0u8; 8]);
    for d in vol.dims {
        let d = u32::try_from(d).map_err(|_| err("dimension exceeds u32"))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for x in vol.origin.iter().chain(vol.spacing.iter()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for v in &vol.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::io("<vxg>", e))
}

pub fn read_vxg_raw<R: Read>(mut r: R) -> Result<RawVolume> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<vxg>", e))?;
    if bytes.len() < 76 {
        return Err(err("truncated header"));
    }
    if &bytes[..4] != VXG_MAGIC {
        return Err(err("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VXG_VERSION {
        return Err(err(format!("unsupported version {version}")));
    }
    let dims = [u32_at(16) as usize, u32_at(20) as usize, u32_at(24) as usize];
    let origin = Vec3::new(f64_at(28), f64_at(36), f64_at(44));
    let spacing = Vec3::new(f64_at(52), f64_at(60), f64_at(68));
    let n = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| err("dimension overflow"))?;
    let body = &bytes[76..];
    if body.len() != 4 * n {
        return Err(err(format!("expected {} value bytes, found {}", 4 * n, body.len())));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(RawVolume { dims, origin, spacing, values })
}

/// Values are stored as f32; occupancies that are not exactly representable
/// are rounded.
pub fn write_vxg<W: Write>(w: W, grid: &VoxelGrid) -> Result<()> {
    write_vxg_raw(
        w,
        &RawVolume {
            dims: grid.dims(),
            origin: grid.origin(),
            spacing: grid.spacing(),
            values: grid.values().iter().map(|&v| v as f32).collect(),
        },
    )
}

pub fn read_vxg<R: Read>(r: R) -> Result<VoxelGrid> {
    let raw = read_vxg_raw(r)?;
    if raw.values.iter().any(|v| !v.is_finite()) {
        return Err(err("non-finite occupancy value"));
    }
    VoxelGrid::new(
        raw.dims,
        raw.origin,
        raw.spacing,
        raw.values.into_iter().map(f64::from).collect(),
    )
}

pub fn write_vxg_file(path: &Path, grid: &VoxelGrid) -> Result<()> {
    let mut w = super::create(path)?;
    write_vxg(&mut w, grid)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_vxg_file(path: &Path) -> Result<VoxelGrid> {
    read_vxg(super::open(path)?).map_err(|e| with_path(e, path))
}

/// Writes a `width × height` depth buffer as a VXG1 volume with `nz = 1`.
pub fn write_depth_file(path: &Path, width: usize, height: usize, depth: &[f64]) -> Result<()> {
    let vol = RawVolume {
        dims: [width, height, 1],
        origin: Vec3::zeros(),
        spacing: Vec3::repeat(1.0),
        values: depth.iter().map(|&d| d as f32).collect(),
    };
    let mut w = super::create(path)?;
    write_vxg_raw(&mut w, &vol)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Format { format, message } => Error::Format {
            format,
            message: format!("{}: {message}", path.display()),
        },
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}
