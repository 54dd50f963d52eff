//! `.fvecs` / `.ivecs` / `.bvecs` containers: each record is a little-endian
//! `i32` dimension followed by that many `f32`, `i32` or `u8` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vectors::VectorSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecFormat {
    Fvecs,
    Ivecs,
    Bvecs,
}

impl VecFormat {
    fn elem_size(self) -> usize {
        match self {
            VecFormat::Fvecs | VecFormat::Ivecs => 4,
            VecFormat::Bvecs => 1,
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "fvecs" => Some(VecFormat::Fvecs),
            "ivecs" => Some(VecFormat::Ivecs),
            "bvecs" => Some(VecFormat::Bvecs),
            _ => None,
        }
    }
}

impl std::str::FromStr for VecFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fvecs" => Ok(VecFormat::Fvecs),
            "ivecs" => Ok(VecFormat::Ivecs),
            "bvecs" => Ok(VecFormat::Bvecs),
            other => Err(Error::InvalidArgument(format!("unknown vector format {other:?}"))),
        }
    }
}

/// Records split into a dimension and their raw little-endian payloads.
fn split_records(bytes: &[u8], format: VecFormat) -> Result<(usize, Vec<&[u8]>)> {
    let mut records = Vec::new();
    let mut dim = None;
    let mut at = 0;
    while at < bytes.len() {
        let record = records.len();
        let header = bytes
            .get(at..at + 4)
            .ok_or(Error::TruncatedRecord { record })?;
        let d = i32::from_le_bytes(header.try_into().unwrap());
        if d <= 0 {
            return Err(Error::Format(format!("record {record} has nonpositive dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::InconsistentDimensionality {
                    record,
                    expected,
                    found: d,
                })
            }
            _ => {}
        }
        let len = d * format.elem_size();
        let payload = bytes
            .get(at + 4..at + 4 + len)
            .ok_or(Error::TruncatedRecord { record })?;
        records.push(payload);
        at += 4 + len;
    }
    Ok((dim.unwrap_or(0), records))
}

/// Decodes a whole container into `f32` rows. An empty input yields zero
/// vectors of dimension 0.
pub fn parse_vectors(bytes: &[u8], format: VecFormat) -> Result<VectorSet> {
    let (dim, records) = split_records(bytes, format)?;
    if records.is_empty() {
        return Ok(VectorSet::empty(0));
    }
    let mut data = Vec::with_capacity(records.len() * dim);
    for payload in records {
        match format {
            VecFormat::Fvecs => data.extend(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()))),
            VecFormat::Ivecs => data.extend(payload.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap()) as f32)),
            VecFormat::Bvecs => data.extend(payload.iter().map(|&b| b as f32)),
        }
    }
    VectorSet::new(dim, data)
}

/// Decodes an `.ivecs` container as integer rows (e.g. ground-truth ids).
pub fn parse_ivecs(bytes: &[u8]) -> Result<Vec<Vec<i32>>> {
    let (_, records) = split_records(bytes, VecFormat::Ivecs)?;
    Ok(records
        .into_iter()
        .map(|p| p.chunks_exact(4).map(|c| i32::from_le_bytes(c.try_into().unwrap())).collect())
        .collect())
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    Ok(bytes)
}

pub fn read_vectors(path: impl AsRef<Path>, format: VecFormat) -> Result<VectorSet> {
    parse_vectors(&read_all(path.as_ref())?, format)
}

pub fn read_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    parse_ivecs(&read_all(path.as_ref())?)
}

pub fn encode_fvecs(data: &VectorSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() * (4 + 4 * data.dim()));
    for row in data.rows() {
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn encode_ivecs<R: AsRef<[i32]>>(rows: &[R]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        let row = row.as_ref();
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Values are rounded and clamped to `0..=255`.
pub fn encode_bvecs(data: &VectorSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() * (4 + data.dim()));
    for row in data.rows() {
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        out.extend(row.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
    }
    out
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn write_fvecs(path: impl AsRef<Path>, data: &VectorSet) -> Result<()> {
    write_all(path.as_ref(), &encode_fvecs(data))
}

pub fn write_ivecs<R: AsRef<[i32]>>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    write_all(path.as_ref(), &encode_ivecs(rows))
}

pub fn write_bvecs(path: impl AsRef<Path>, data: &VectorSet) -> Result<()> {
    write_all(path.as_ref(), &encode_bvecs(data))
}
