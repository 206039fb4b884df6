//! Minimal NIfTI-1 single-file (`n+1`) reader and writer.
//!
//! Only 3D int16 and float32 payloads are accepted, optionally gzip-wrapped.
//! Volumes are written as float32, masks as int16.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use flate2::read::GzDecoder;
use flate2::{Compression, GzBuilder};

use super::{Geometry, Mask, Volume};
use crate::error::{Error, Result};

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;
const UNITS_MM: u8 = 2;

struct RawImage {
    geometry: Geometry,
    values: Vec<f64>,
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let raw = read_raw(path.as_ref())?;
    let values = raw.values.iter().map(|&v| v as f32).collect::<Vec<_>>();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidVolume(format!(
            "{}: non-finite value at voxel {i} after scaling",
            path.as_ref().display()
        )));
    }
    Volume::new(raw.geometry, values)
}

/// Reads a label file. Values must be non-negative integers that fit in 16 bits.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let raw = read_raw(path.as_ref())?;
    let labels = raw
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.fract() == 0.0 && (0.0..=u16::MAX as f64).contains(&v) {
                Ok(v as u16)
            } else {
                Err(Error::InvalidVolume(format!(
                    "{}: voxel {i} holds {v}, not a non-negative integer label",
                    path.as_ref().display()
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Mask::new(raw.geometry, labels)
}

pub fn write_volume(volume: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let mut data = Vec::with_capacity(volume.values().len() * 4);
    for &v in volume.values() {
        data.write_f32::<LittleEndian>(v).expect("vec write");
    }
    write_raw(path.as_ref(), volume.geometry(), DT_FLOAT32, &data)
}

pub fn write_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let mut data = Vec::with_capacity(mask.labels().len() * 2);
    for &l in mask.labels() {
        let v = i16::try_from(l)
            .map_err(|_| Error::InvalidParameter(format!("label {l} does not fit in an int16 mask file")))?;
        data.write_i16::<LittleEndian>(v).expect("vec write");
    }
    write_raw(path.as_ref(), mask.geometry(), DT_INT16, &data)
}

fn read_raw(path: &Path) -> Result<RawImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::MalformedFile(format!("{}: gzip: {e}", path.display())))?;
        out
    } else {
        bytes
    };
    parse(&bytes).map_err(|e| match e {
        Error::UnsupportedFormat(m) => Error::UnsupportedFormat(format!("{}: {m}", path.display())),
        Error::MalformedFile(m) => Error::MalformedFile(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn parse(bytes: &[u8]) -> Result<RawImage> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::MalformedFile(format!(
            "{} bytes is shorter than a NIfTI-1 header",
            bytes.len()
        )));
    }
    if LittleEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
        parse_with::<LittleEndian>(bytes)
    } else if BigEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
        parse_with::<BigEndian>(bytes)
    } else {
        Err(Error::UnsupportedFormat("sizeof_hdr is not 348 (not NIfTI-1)".into()))
    }
}

fn parse_with<B: ByteOrder>(bytes: &[u8]) -> Result<RawImage> {
    let h = &bytes[..HEADER_SIZE];
    match &h[344..348] {
        b"n+1\0" => {}
        b"ni1\0" => {
            return Err(Error::UnsupportedFormat(
                "two-file (.hdr/.img) NIfTI is not supported".into(),
            ))
        }
        other => return Err(Error::UnsupportedFormat(format!("bad magic {other:?}"))),
    }

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = B::read_i16(&h[40 + 2 * i..]);
    }
    let ndim = dim[0];
    if !(3..=7).contains(&ndim) || dim[4..=ndim as usize].iter().any(|&d| d > 1) {
        return Err(Error::UnsupportedFormat(format!(
            "only 3 spatial dimensions are supported, dim = {dim:?}"
        )));
    }
    if dim[1..=3].iter().any(|&d| d < 1) {
        return Err(Error::MalformedFile(format!("non-positive dimension in {dim:?}")));
    }
    let dims = [dim[1] as usize, dim[2] as usize, dim[3] as usize];

    let datatype = B::read_i16(&h[70..]);
    let width = match datatype {
        DT_INT16 => 2,
        DT_FLOAT32 => 4,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "datatype {other} (only int16=4 and float32=16 are supported)"
            )))
        }
    };

    let mut pixdim = [0f32; 8];
    for (i, p) in pixdim.iter_mut().enumerate() {
        *p = B::read_f32(&h[76 + 4 * i..]);
    }
    let spacing = [pixdim[1], pixdim[2], pixdim[3]].map(|s| (s as f64).abs());

    let vox_offset = B::read_f32(&h[108..]);
    if !(vox_offset.is_finite() && vox_offset >= DATA_OFFSET as f32) {
        return Err(Error::MalformedFile(format!("vox_offset {vox_offset} < 352")));
    }
    let vox_offset = vox_offset as usize;

    let slope = B::read_f32(&h[112..]) as f64;
    let inter = B::read_f32(&h[116..]) as f64;
    let (slope, inter) = if slope == 0.0 || !slope.is_finite() {
        (1.0, 0.0)
    } else {
        (slope, if inter.is_finite() { inter } else { 0.0 })
    };

    let qform_code = B::read_i16(&h[252..]);
    let sform_code = B::read_i16(&h[254..]);
    let origin = if qform_code > 0 {
        [268, 272, 276].map(|o| B::read_f32(&h[o..]) as f64)
    } else if sform_code > 0 {
        [280 + 12, 296 + 12, 312 + 12].map(|o| B::read_f32(&h[o..]) as f64)
    } else {
        [0.0; 3]
    };

    let geometry = Geometry::new(dims, spacing, origin).map_err(|e| Error::MalformedFile(e.to_string()))?;
    let n = geometry.len();
    let end = vox_offset + n * width;
    if bytes.len() < end {
        return Err(Error::MalformedFile(format!(
            "payload truncated: need {end} bytes, have {}",
            bytes.len()
        )));
    }
    let mut cur = Cursor::new(&bytes[vox_offset..end]);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let v = match datatype {
            DT_INT16 => cur.read_i16::<B>().expect("length checked") as f64,
            _ => cur.read_f32::<B>().expect("length checked") as f64,
        };
        values.push(if slope == 1.0 && inter == 0.0 {
            v
        } else {
            slope * v + inter
        });
    }
    Ok(RawImage { geometry, values })
}

fn header(geometry: &Geometry, datatype: i16) -> Vec<u8> {
    let mut h = vec![0u8; DATA_OFFSET];
    let [nx, ny, nz] = geometry.dims;
    let [sx, sy, sz] = geometry.spacing;
    let [ox, oy, oz] = geometry.origin;
    LittleEndian::write_i32(&mut h[0..], HEADER_SIZE as i32);
    h[38] = b'r'; // regular
    let dim = [3i16, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[40 + 2 * i..], *d);
    }
    LittleEndian::write_i16(&mut h[70..], datatype);
    LittleEndian::write_i16(&mut h[72..], if datatype == DT_INT16 { 16 } else { 32 });
    let pixdim = [1.0f32, sx as f32, sy as f32, sz as f32, 0.0, 0.0, 0.0, 0.0];
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[76 + 4 * i..], *p);
    }
    LittleEndian::write_f32(&mut h[108..], DATA_OFFSET as f32);
    LittleEndian::write_f32(&mut h[112..], 1.0);
    LittleEndian::write_f32(&mut h[116..], 0.0);
    h[123] = UNITS_MM;
    LittleEndian::write_i16(&mut h[252..], 1);
    LittleEndian::write_i16(&mut h[254..], 1);
    for (o, v) in [(268, ox), (272, oy), (276, oz)] {
        LittleEndian::write_f32(&mut h[o..], v as f32);
    }
    let srow = [[sx, 0.0, 0.0, ox], [0.0, sy, 0.0, oy], [0.0, 0.0, sz, oz]];
    for (r, row) in srow.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            LittleEndian::write_f32(&mut h[280 + 16 * r + 4 * c..], *v as f32);
        }
    }
    h[344..348].copy_from_slice(b"n+1\0");
    h
}

fn write_raw(path: &Path, geometry: &Geometry, datatype: i16, data: &[u8]) -> Result<()> {
    if geometry.dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::InvalidParameter(format!(
            "dims {:?} exceed the NIfTI-1 limit of 32767",
            geometry.dims
        )));
    }
    let mut bytes = header(geometry, datatype);
    bytes.extend_from_slice(data);
    let gz = path
        .file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.ends_with(".gz"));
    let payload = if gz {
        // mtime stays 0 so repeated writes are byte-identical
        let mut enc = GzBuilder::new().write(Vec::new(), Compression::default());
        enc.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes
    };
    fs::write(path, payload).map_err(|e| Error::io(path, e))
}
