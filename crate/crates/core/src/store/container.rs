//! `.scm` matrix container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SCM1"
//! 4       2     version (u16 LE)
//! 6       2     dtype (u16 LE, 0 = complex128)
//! 8       8     rows (u64 LE)
//! 16      8     cols (u64 LE)
//! 24      16·n  payload, row-major (re, im) f64 LE
//! 24+16n  4     CRC-32 of the payload (u32 LE)
//! ```

use std::fs;
use std::path::Path;

use crate::wavefield::{ComplexField, GeometryTag};
use crate::{CMat, Error, Result, C64};

pub const MAGIC: [u8; 4] = *b"SCM1";
pub const VERSION: u16 = 1;
pub const DTYPE_C128: u16 = 0;
const HEADER: usize = 24;

pub fn encode_matrix(m: &CMat) -> Vec<u8> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(HEADER + rows * cols * 16 + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&DTYPE_C128.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for i in 0..rows {
        for j in 0..cols {
            let v = m[(i, j)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[HEADER..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(bytes[at..at + 2].try_into().expect("2 bytes"))
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_matrix(bytes: &[u8]) -> Result<CMat> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            expected: HEADER + 4,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < HEADER + 4 {
        return Err(Error::Truncated {
            expected: HEADER + 4,
            found: bytes.len(),
        });
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = u16_at(bytes, 6);
    if dtype != DTYPE_C128 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let (rows, cols) = (u64_at(bytes, 8), u64_at(bytes, 16));
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add((HEADER + 4) as u64))
        .ok_or_else(|| Error::Format(format!("implausible shape {rows}x{cols}")))?;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            expected: expected as usize,
            found: bytes.len(),
        });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let end = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[end..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[HEADER..end]);
    if stored != computed {
        return Err(Error::BadChecksum { stored, computed });
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let at = HEADER + (i * cols + j) * 16;
        C64::new(f64_at(bytes, at), f64_at(bytes, at + 8))
    }))
}

pub fn save_matrix(m: &CMat, path: &Path) -> Result<()> {
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<CMat> {
    decode_matrix(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Stores a field as an `n x 1` matrix.
pub fn save_field(field: &ComplexField, path: &Path) -> Result<()> {
    save_matrix(&field.to_column(), path)
}

pub fn load_field(path: &Path, tag: GeometryTag) -> Result<ComplexField> {
    let m = load_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::Format(format!(
            "{} holds a {}x{} matrix, not a field",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(ComplexField::from_column(&m, tag))
}
