//! Minimal NumPy `.npy` (format 1.0/2.0) support for C-ordered float arrays.
//!
//! The header carries dtype, byte order and shape, which makes it the neutral
//! self-describing tensor container for sample stores and trial archives.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, IoContext, Result};

const MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Clone, Debug, PartialEq)]
pub enum NpyData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: NpyData,
}

impl NpyArray {
    pub fn into_f32(self) -> Vec<f32> {
        match self.data {
            NpyData::F32(v) => v,
            NpyData::F64(v) => v.into_iter().map(|x| x as f32).collect(),
        }
    }

    pub fn into_f64(self) -> Vec<f64> {
        match self.data {
            NpyData::F32(v) => v.into_iter().map(f64::from).collect(),
            NpyData::F64(v) => v,
        }
    }
}

fn header(descr: &str, shape: &[usize]) -> Vec<u8> {
    let dims = match shape.len() {
        1 => format!("{},", shape[0]),
        _ => shape.iter().map(usize::to_string).collect::<Vec<_>>().join(", "),
    };
    let mut dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({dims}), }}");
    // Pad so the data starts on a 64-byte boundary; the header ends with '\n'.
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    dict.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    dict.push('\n');
    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

pub fn write_f32(path: &Path, shape: &[usize], data: &[f32]) -> Result<()> {
    assert_eq!(shape.iter().product::<usize>(), data.len());
    let mut w = BufWriter::new(File::create(path).at(path)?);
    w.write_all(&header("<f4", shape)).at(path)?;
    for v in data {
        w.write_all(&v.to_le_bytes()).at(path)?;
    }
    w.flush().at(path)
}

pub fn write_f64(path: &Path, shape: &[usize], data: &[f64]) -> Result<()> {
    assert_eq!(shape.iter().product::<usize>(), data.len());
    let mut w = BufWriter::new(File::create(path).at(path)?);
    w.write_all(&header("<f8", shape)).at(path)?;
    for v in data {
        w.write_all(&v.to_le_bytes()).at(path)?;
    }
    w.flush().at(path)
}

fn field<'a>(dict: &'a str, key: &str) -> Option<&'a str> {
    let start = dict.find(&format!("'{key}'"))? + key.len() + 2;
    let rest = dict[start..].trim_start().strip_prefix(':')?.trim_start();
    Some(rest)
}

pub fn read(path: &Path) -> Result<NpyArray> {
    let bad = |reason: &str| Error::Ingestion { path: path.to_path_buf(), reason: reason.to_string() };
    let mut r = BufReader::new(File::open(path).at(path)?);
    let mut pre = [0u8; 8];
    r.read_exact(&mut pre).map_err(|_| bad("truncated .npy preamble"))?;
    if &pre[..6] != MAGIC {
        return Err(bad("not an .npy file"));
    }
    let header_len = match pre[6] {
        1 => {
            let mut b = [0u8; 2];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            u16::from_le_bytes(b) as usize
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            u32::from_le_bytes(b) as usize
        }
        v => return Err(bad(&format!("unsupported .npy version {v}"))),
    };
    let mut hbytes = vec![0u8; header_len];
    r.read_exact(&mut hbytes).map_err(|_| bad("truncated header"))?;
    let dict = String::from_utf8_lossy(&hbytes);

    let descr = field(&dict, "descr").ok_or_else(|| bad("header lacks descr"))?;
    let descr = descr.trim_start_matches(['\'', '"']);
    let descr: String = descr.chars().take_while(|c| *c != '\'' && *c != '"').collect();
    let fortran = field(&dict, "fortran_order").ok_or_else(|| bad("header lacks fortran_order"))?;
    if fortran.starts_with("True") {
        return Err(bad("Fortran-ordered arrays are not supported"));
    }
    let shape_text = field(&dict, "shape").ok_or_else(|| bad("header lacks shape"))?;
    let inner = shape_text.trim_start_matches('(');
    let inner = &inner[..inner.find(')').ok_or_else(|| bad("malformed shape"))?];
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| bad("malformed shape")))
        .collect::<Result<Vec<_>>>()?;
    let n: usize = shape.iter().product();

    let mut raw = Vec::new();
    r.read_to_end(&mut raw).at(path)?;
    let (little, width) = match descr.as_str() {
        "<f4" | "=f4" => (true, 4),
        ">f4" => (false, 4),
        "<f8" | "=f8" => (true, 8),
        ">f8" => (false, 8),
        other => return Err(bad(&format!("unsupported dtype {other}"))),
    };
    if raw.len() < n * width {
        return Err(bad(&format!("payload has {} bytes, expected {}", raw.len(), n * width)));
    }
    let data = if width == 4 {
        NpyData::F32(
            raw.chunks_exact(4)
                .take(n)
                .map(|c| {
                    let b = [c[0], c[1], c[2], c[3]];
                    if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
                })
                .collect(),
        )
    } else {
        NpyData::F64(
            raw.chunks_exact(8)
                .take(n)
                .map(|c| {
                    let b: [u8; 8] = c.try_into().expect("8 bytes");
                    if little { f64::from_le_bytes(b) } else { f64::from_be_bytes(b) }
                })
                .collect(),
        )
    };
    Ok(NpyArray { shape, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_64_byte_aligned() {
        for shape in [vec![3], vec![512, 128, 9, 9], vec![0, 2]] {
            assert_eq!(header("<f4", &shape).len() % 64, 0);
        }
    }

    #[test]
    fn round_trips_both_widths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.npy");
        let data: Vec<f32> = (0..24).map(|i| i as f32 * 0.5 - 3.0).collect();
        write_f32(&p, &[2, 3, 4], &data).unwrap();
        let back = read(&p).unwrap();
        assert_eq!(back.shape, vec![2, 3, 4]);
        assert_eq!(back.into_f32(), data);

        let data: Vec<f64> = vec![1.0, f64::MIN_POSITIVE, -0.0];
        write_f64(&p, &[3], &data).unwrap();
        let back = read(&p).unwrap();
        assert_eq!(back.shape, vec![3]);
        assert_eq!(back.into_f64(), data);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.npy");
        std::fs::write(&p, b"hello world").unwrap();
        assert!(matches!(read(&p), Err(Error::Ingestion { .. })));
    }
}
