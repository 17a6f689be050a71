//! The NPY v1.0 subset used for matrix interchange: little-endian `f4`/`f8`,
//! C order, two-dimensional.
//!
//! Layout: magic `\x93NUMPY`, version bytes `1 0`, a little-endian u16 header
//! length, an ASCII dict padded with spaces and terminated by `\n` so the
//! payload starts on a 64-byte boundary, then the raw values.

use std::io::{Read, Write};

use super::MatrixFileHeader;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }
}

fn bad(reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: Default::default(),
        reason: reason.into(),
    }
}

/// Value of `key` in the header dict, as raw text up to the next top-level
/// comma or closing brace.
fn dict_value<'a>(dict: &'a str, key: &str) -> Result<&'a str> {
    let pat_sq = format!("'{key}'");
    let pat_dq = format!("\"{key}\"");
    let start = dict
        .find(&pat_sq)
        .map(|p| p + pat_sq.len())
        .or_else(|| dict.find(&pat_dq).map(|p| p + pat_dq.len()))
        .ok_or_else(|| bad(format!("missing key {key}")))?;
    let rest = dict[start..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| bad(format!("no ':' after {key}")))?
        .trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|p| p + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(|| bad(format!("unterminated value for {key}")))?;
    Ok(rest[..end].trim())
}

pub fn parse_header(dict: &str) -> Result<MatrixFileHeader> {
    let descr = dict_value(dict, "descr")?.trim_matches(['\'', '"']);
    let dtype = match descr {
        "<f4" => Dtype::F32,
        "<f8" => Dtype::F64,
        other => return Err(Error::Unsupported(format!("npy dtype {other}"))),
    };
    match dict_value(dict, "fortran_order")? {
        "False" => {}
        "True" => return Err(Error::Unsupported("fortran-order npy".into())),
        other => return Err(bad(format!("fortran_order = {other}"))),
    }
    let shape_txt = dict_value(dict, "shape")?;
    let inner = shape_txt
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| bad(format!("shape {shape_txt}")))?;
    let dims: Vec<usize> = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| bad(format!("shape entry {s}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Unsupported(format!(
            "npy with {} dimensions (need 2)",
            dims.len()
        )));
    }
    Ok(MatrixFileHeader {
        dtype,
        shape: (dims[0], dims[1]),
    })
}

/// Reads header and payload; values widened to f64, row-major.
pub fn read<R: Read>(mut r: R) -> Result<(MatrixFileHeader, Vec<f64>)> {
    let io = |e| Error::Io {
        path: Default::default(),
        source: e,
    };
    let mut pre = [0u8; 10];
    r.read_exact(&mut pre)
        .map_err(|_| bad("file shorter than npy preamble"))?;
    if &pre[..6] != MAGIC {
        return Err(bad("missing \\x93NUMPY magic"));
    }
    if pre[6] != 1 {
        return Err(Error::Unsupported(format!(
            "npy version {}.{}",
            pre[6], pre[7]
        )));
    }
    let hlen = u16::from_le_bytes([pre[8], pre[9]]) as usize;
    let mut dict = vec![0u8; hlen];
    r.read_exact(&mut dict)
        .map_err(|_| bad("truncated header"))?;
    let dict = std::str::from_utf8(&dict).map_err(|_| bad("header is not ASCII"))?;
    let header = parse_header(dict)?;

    let (rows, cols) = header.shape;
    let count = rows * cols;
    let mut payload = Vec::with_capacity(count * header.dtype.size());
    r.read_to_end(&mut payload).map_err(io)?;
    if payload.len() != count * header.dtype.size() {
        return Err(Error::Shape(format!(
            "npy payload has {} bytes, shape ({rows}, {cols}) needs {}",
            payload.len(),
            count * header.dtype.size()
        )));
    }
    let values = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    };
    Ok((header, values))
}

pub fn header_bytes(dtype: Dtype, rows: usize, cols: usize) -> Vec<u8> {
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({rows}, {cols}), }}",
        dtype.descr()
    );
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');
    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

pub fn write<W: Write>(
    mut w: W,
    dtype: Dtype,
    rows: usize,
    cols: usize,
    values: &[f64],
) -> std::io::Result<()> {
    w.write_all(&header_bytes(dtype, rows, cols))?;
    match dtype {
        Dtype::F64 => {
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Dtype::F32 => {
            for v in values {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()
}
