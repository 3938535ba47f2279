//! IDX container format, big-endian: two zero magic bytes, a type byte
//! (0x08 = unsigned byte), a dimension-count byte, one u32 size per
//! dimension, then the payload in row-major order.

use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const TYPE_UNSIGNED_BYTE: u8 = 0x08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn format_err(offset: u64, message: impl Into<String>) -> Error {
    Error::Format { offset, message: message.into() }
}

/// Read an IDX file of unsigned bytes with exactly `expect_dims` dimensions.
pub fn read_idx(path: &Path, expect_dims: u8) -> Result<IdxArray> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| format_err(0, format!("{}: truncated magic", path.display())))?;
    if magic[0] != 0 || magic[1] != 0 {
        return Err(format_err(0, format!("bad magic prefix {:02x}{:02x}, expected 0000", magic[0], magic[1])));
    }
    if magic[2] != TYPE_UNSIGNED_BYTE {
        return Err(format_err(2, format!("type byte {:#04x}, only unsigned byte (0x08) is supported", magic[2])));
    }
    if magic[3] != expect_dims {
        return Err(format_err(3, format!("dimension count {}, expected {expect_dims}", magic[3])));
    }

    let mut dims = Vec::with_capacity(expect_dims as usize);
    let mut offset = 4u64;
    for _ in 0..expect_dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| format_err(offset, "truncated dimension header"))?;
        dims.push(u32::from_be_bytes(b) as usize);
        offset += 4;
    }

    let total: usize = dims.iter().product();
    let mut data = vec![0u8; total];
    r.read_exact(&mut data)
        .map_err(|_| format_err(offset, format!("truncated payload, expected {total} bytes")))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(format_err(offset + total as u64, "trailing bytes after payload"));
    }
    Ok(IdxArray { dims, data })
}

pub fn write_idx(path: &Path, dims: &[usize], data: &[u8]) -> Result<()> {
    let total: usize = dims.iter().product();
    if total != data.len() {
        return Err(Error::Shape(format!(
            "idx payload length {} does not match dims {dims:?}",
            data.len()
        )));
    }
    if dims.len() > u8::MAX as usize {
        return Err(Error::Shape(format!("too many idx dimensions: {}", dims.len())));
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&[0, 0, TYPE_UNSIGNED_BYTE, dims.len() as u8])?;
    for &d in dims {
        w.write_all(&(d as u32).to_be_bytes())?;
    }
    w.write_all(data)?;
    w.flush()?;
    Ok(())
}
