//! Reader for MATLAB Level-5 MAT-files (the `-v5`/`-v7` layout, including
//! zlib-compressed elements). Supports numeric, char, cell and struct arrays,
//! which covers the DEAP and DREAMER distributions. HDF5-based `-v7.3` files
//! are rejected.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use flate2::read::ZlibDecoder;

use crate::error::{Error, IoContext, Result};

const MI_INT8: u32 = 1;
const MI_UINT8: u32 = 2;
const MI_INT16: u32 = 3;
const MI_UINT16: u32 = 4;
const MI_INT32: u32 = 5;
const MI_UINT32: u32 = 6;
const MI_SINGLE: u32 = 7;
const MI_DOUBLE: u32 = 9;
const MI_INT64: u32 = 12;
const MI_UINT64: u32 = 13;
const MI_MATRIX: u32 = 14;
const MI_COMPRESSED: u32 = 15;
const MI_UTF8: u32 = 16;

const CLASS_CELL: u32 = 1;
const CLASS_STRUCT: u32 = 2;
const CLASS_CHAR: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum MatValue {
    /// Real part only, column-major.
    Numeric { dims: Vec<usize>, data: Vec<f64> },
    Char(String),
    Cell { dims: Vec<usize>, items: Vec<MatValue> },
    Struct { dims: Vec<usize>, items: Vec<BTreeMap<String, MatValue>> },
    Empty,
}

impl MatValue {
    pub fn numeric(&self) -> Option<(&[usize], &[f64])> {
        match self {
            MatValue::Numeric { dims, data } => Some((dims, data)),
            _ => None,
        }
    }

    /// Field of a scalar (1×1) struct.
    pub fn field(&self, name: &str) -> Option<&MatValue> {
        match self {
            MatValue::Struct { items, .. } if items.len() == 1 => items[0].get(name),
            _ => None,
        }
    }

    pub fn cells(&self) -> Option<&[MatValue]> {
        match self {
            MatValue::Cell { items, .. } => Some(items),
            _ => None,
        }
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    little: bool,
}

impl<'a> Cursor<'a> {
    fn u32_at(&self, at: usize) -> Option<u32> {
        let b: [u8; 4] = self.buf.get(at..at + 4)?.try_into().ok()?;
        Some(if self.little { u32::from_le_bytes(b) } else { u32::from_be_bytes(b) })
    }

    fn done(&self) -> bool {
        self.pos >= self.buf.len()
    }

    /// Next data element as `(type, payload)`, handling the packed small format.
    fn element(&mut self) -> std::result::Result<(u32, &'a [u8]), String> {
        let first = self.u32_at(self.pos).ok_or("truncated element tag")?;
        if first >> 16 != 0 {
            let (ty, n) = (first & 0xffff, (first >> 16) as usize);
            if n > 4 {
                return Err("malformed small data element".into());
            }
            let data = self.buf.get(self.pos + 4..self.pos + 4 + n).ok_or("truncated small element")?;
            self.pos += 8;
            return Ok((ty, data));
        }
        let n = self.u32_at(self.pos + 4).ok_or("truncated element tag")? as usize;
        let start = self.pos + 8;
        let data = self.buf.get(start..start + n).ok_or("element runs past end of file")?;
        self.pos = if first == MI_COMPRESSED { start + n } else { start + n.div_ceil(8) * 8 };
        Ok((first, data))
    }
}

fn to_f64(ty: u32, bytes: &[u8], little: bool) -> std::result::Result<Vec<f64>, String> {
    macro_rules! conv {
        ($t:ty, $w:expr) => {
            bytes
                .chunks_exact($w)
                .map(|c| {
                    let b: [u8; $w] = c.try_into().unwrap();
                    (if little { <$t>::from_le_bytes(b) } else { <$t>::from_be_bytes(b) }) as f64
                })
                .collect()
        };
    }
    Ok(match ty {
        MI_INT8 => bytes.iter().map(|&b| b as i8 as f64).collect(),
        MI_UINT8 => bytes.iter().map(|&b| b as f64).collect(),
        MI_INT16 => conv!(i16, 2),
        MI_UINT16 => conv!(u16, 2),
        MI_INT32 => conv!(i32, 4),
        MI_UINT32 => conv!(u32, 4),
        MI_SINGLE => conv!(f32, 4),
        MI_DOUBLE => conv!(f64, 8),
        MI_INT64 => conv!(i64, 8),
        MI_UINT64 => conv!(u64, 8),
        other => return Err(format!("unsupported numeric data type {other}")),
    })
}

fn parse_matrix(payload: &[u8], little: bool) -> std::result::Result<(String, MatValue), String> {
    if payload.is_empty() {
        return Ok((String::new(), MatValue::Empty));
    }
    let mut c = Cursor { buf: payload, pos: 0, little };
    let (_, flags) = c.element()?;
    let class = {
        let b: [u8; 4] = flags.get(..4).ok_or("short array flags")?.try_into().unwrap();
        (if little { u32::from_le_bytes(b) } else { u32::from_be_bytes(b) }) & 0xff
    };
    let (dty, dbytes) = c.element()?;
    let dims: Vec<usize> = to_f64(dty, dbytes, little)?.into_iter().map(|d| d as usize).collect();
    let (_, name) = c.element()?;
    let name = String::from_utf8_lossy(name).trim_end_matches('\0').to_string();
    let count: usize = dims.iter().product();

    let value = match class {
        CLASS_CELL => {
            let mut items = Vec::with_capacity(count);
            for _ in 0..count {
                let (ty, sub) = c.element()?;
                if ty != MI_MATRIX {
                    return Err(format!("cell element of type {ty}"));
                }
                items.push(parse_matrix(sub, little)?.1);
            }
            MatValue::Cell { dims, items }
        }
        CLASS_STRUCT => {
            let (lty, lbytes) = c.element()?;
            let name_len = to_f64(lty, lbytes, little)?.first().copied().ok_or("missing field name length")? as usize;
            let (_, names) = c.element()?;
            let fields: Vec<String> = if name_len == 0 {
                Vec::new()
            } else {
                names
                    .chunks(name_len)
                    .map(|n| String::from_utf8_lossy(n).trim_end_matches('\0').to_string())
                    .collect()
            };
            let mut items = Vec::with_capacity(count);
            for _ in 0..count {
                let mut map = BTreeMap::new();
                for f in &fields {
                    let (ty, sub) = c.element()?;
                    if ty != MI_MATRIX {
                        return Err(format!("struct field {f} of type {ty}"));
                    }
                    map.insert(f.clone(), parse_matrix(sub, little)?.1);
                }
                items.push(map);
            }
            MatValue::Struct { dims, items }
        }
        CLASS_CHAR => {
            if c.done() {
                MatValue::Char(String::new())
            } else {
                let (ty, bytes) = c.element()?;
                let text = match ty {
                    MI_UTF8 | MI_UINT8 | MI_INT8 => String::from_utf8_lossy(bytes).into_owned(),
                    _ => to_f64(ty, bytes, little)?
                        .into_iter()
                        .map(|u| char::from_u32(u as u32).unwrap_or('\u{fffd}'))
                        .collect(),
                };
                MatValue::Char(text)
            }
        }
        6..=15 => {
            let data = if c.done() {
                Vec::new()
            } else {
                let (ty, bytes) = c.element()?;
                to_f64(ty, bytes, little)?
            };
            if data.len() != count {
                return Err(format!("array `{name}` has {} values for dims {dims:?}", data.len()));
            }
            MatValue::Numeric { dims, data }
        }
        other => return Err(format!("unsupported MATLAB class {other} for `{name}`")),
    };
    Ok((name, value))
}

/// Reads every top-level variable of a MAT-file.
pub fn read_mat(path: &Path) -> Result<BTreeMap<String, MatValue>> {
    let bytes = std::fs::read(path).at(path)?;
    parse_mat(&bytes).map_err(|reason| Error::Ingestion { path: path.to_path_buf(), reason })
}

fn parse_mat(bytes: &[u8]) -> std::result::Result<BTreeMap<String, MatValue>, String> {
    if bytes.len() < 128 {
        return Err("file too short for a MAT-file header".into());
    }
    if bytes.starts_with(b"MATLAB 7.3") || bytes[..128].windows(4).any(|w| w == b"HDF5") {
        return Err("MATLAB v7.3 (HDF5) files are not supported; re-save with -v7".into());
    }
    let little = match &bytes[126..128] {
        b"IM" => true,
        b"MI" => false,
        _ => return Err("missing MAT-file endian indicator".into()),
    };
    let mut vars = BTreeMap::new();
    let mut c = Cursor { buf: &bytes[128..], pos: 0, little };
    while !c.done() {
        let (ty, payload) = c.element()?;
        let (name, value) = match ty {
            MI_MATRIX => parse_matrix(payload, little)?,
            MI_COMPRESSED => {
                let mut inflated = Vec::new();
                ZlibDecoder::new(payload).read_to_end(&mut inflated).map_err(|e| format!("zlib: {e}"))?;
                let mut inner = Cursor { buf: &inflated, pos: 0, little };
                let (ity, ipayload) = inner.element()?;
                if ity != MI_MATRIX {
                    continue;
                }
                parse_matrix(ipayload, little)?
            }
            _ => continue,
        };
        vars.insert(name, value);
    }
    Ok(vars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_hdf5_files() {
        assert!(parse_mat(b"short").is_err());
        let mut v73 = b"MATLAB 7.3 MAT-file".to_vec();
        v73.resize(200, b' ');
        assert!(parse_mat(&v73).unwrap_err().contains("7.3"));
    }
}
