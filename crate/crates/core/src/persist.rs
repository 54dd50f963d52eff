//! Binary file formats, all little-endian.
//!
//! * `PNRM1` transform: magic, `u32 d`, `f32 γ`, `d×d f32` composed matrix,
//!   `d×d f32` warm start, `u64` seed.
//! * `PFLT1` / `PIVF1` / `PHNW1` indexes: magic, `u32` version, the level
//!   thresholds, an optional embedded `PNRM1` blob, then the index payload.
//!   Tail energies are recomputed on load.

use std::fs;
use std::path::Path;

use crate::bounds::LevelSpec;
use crate::dataset::TransformedDataset;
use crate::error::{Error, Result};
use crate::index::{FlatIndex, HnswIndex, HnswParams, IvfFlatIndex};
use crate::layout::LevelMajorBatch;
use crate::transform::TransformModel;
use crate::vectors::VectorSet;

pub const TRANSFORM_MAGIC: &[u8; 5] = b"PNRM1";
pub const FLAT_MAGIC: &[u8; 5] = b"PFLT1";
pub const IVF_MAGIC: &[u8; 5] = b"PIVF1";
pub const HNSW_MAGIC: &[u8; 5] = b"PHNW1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f32s(&mut self, vs: &[f32]) {
        for v in vs {
            self.bytes(&v.to_le_bytes());
        }
    }
    fn u32s(&mut self, vs: &[u32]) {
        for v in vs {
            self.u32(*v);
        }
    }
    fn len_u32(&mut self, n: usize) -> Result<()> {
        let v = u32::try_from(n).map_err(|_| Error::Format(format!("count {n} exceeds u32")))?;
        self.u32(v);
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, at: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of file".into()))?;
        let out = &self.buf[self.at..end];
        self.at = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn magic(&mut self, expected: &[u8; 5]) -> Result<()> {
        let got = self.take(5)?;
        if got != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(expected)
            )));
        }
        Ok(())
    }
    fn finish(&self) -> Result<()> {
        if self.at != self.buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.at)));
        }
        Ok(())
    }
}

pub fn encode_transform(model: &TransformModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(TRANSFORM_MAGIC);
    w.u32(model.dim() as u32);
    w.bytes(&model.gamma().to_le_bytes());
    w.f32s(model.matrix());
    w.f32s(model.warm_start());
    w.u64(model.seed());
    w.0
}

fn read_transform(r: &mut Reader<'_>) -> Result<TransformModel> {
    r.magic(TRANSFORM_MAGIC)?;
    let d = r.u32()? as usize;
    if d == 0 {
        return Err(Error::Format("transform dimension is zero".into()));
    }
    let gamma = r.f32()?;
    let matrix = r.f32s(d * d)?;
    let warm = r.f32s(d * d)?;
    let seed = r.u64()?;
    TransformModel::from_published(d, gamma, matrix, warm, seed)
}

/// Decodes a `PNRM1` transform, checking magic and orthogonality.
pub fn decode_transform(bytes: &[u8]) -> Result<TransformModel> {
    let mut r = Reader::new(bytes);
    let model = read_transform(&mut r)?;
    r.finish()?;
    Ok(model)
}

pub fn save_transform(path: impl AsRef<Path>, model: &TransformModel) -> Result<()> {
    Ok(fs::write(path, encode_transform(model))?)
}

pub fn load_transform(path: impl AsRef<Path>) -> Result<TransformModel> {
    decode_transform(&fs::read(path)?)
}

fn write_header(w: &mut Writer, magic: &[u8; 5], levels: &LevelSpec, model: Option<&TransformModel>) -> Result<()> {
    w.bytes(magic);
    w.u32(FORMAT_VERSION);
    w.len_u32(levels.dim())?;
    w.len_u32(levels.num_levels())?;
    for &t in levels.thresholds() {
        w.len_u32(t)?;
    }
    match model {
        Some(m) => {
            w.u8(1);
            w.bytes(&encode_transform(m));
        }
        None => w.u8(0),
    }
    Ok(())
}

fn read_header(r: &mut Reader<'_>, magic: &[u8; 5]) -> Result<(LevelSpec, Option<TransformModel>)> {
    r.magic(magic)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let d = r.u32()? as usize;
    let l = r.u32()? as usize;
    if l == 0 || l > d {
        return Err(Error::Format(format!("invalid level count {l} for d={d}")));
    }
    let thresholds = r.u32s(l + 1)?.into_iter().map(|t| t as usize).collect();
    let levels = LevelSpec::new(d, thresholds).map_err(|e| Error::Format(e.to_string()))?;
    let model = match r.u8()? {
        0 => None,
        1 => {
            let m = read_transform(r)?;
            if m.dim() != d {
                return Err(Error::Format("embedded transform dimension differs from index".into()));
            }
            Some(m)
        }
        other => return Err(Error::Format(format!("bad transform flag {other}"))),
    };
    Ok((levels, model))
}

fn write_batches(w: &mut Writer, batches: &[LevelMajorBatch]) -> Result<()> {
    w.len_u32(batches.len())?;
    for b in batches {
        w.len_u32(b.len())?;
        w.u32s(b.ids());
        w.f32s(b.data());
    }
    Ok(())
}

fn read_batches(r: &mut Reader<'_>, levels: &LevelSpec) -> Result<Vec<LevelMajorBatch>> {
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let b = r.u32()? as usize;
        let ids = r.u32s(b)?;
        let data = r.f32s(b.checked_mul(levels.dim()).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        let batch = LevelMajorBatch::from_level_major(levels.clone(), ids, data)?;
        out.push(batch);
    }
    Ok(out)
}

pub fn encode_flat(index: &FlatIndex) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    write_header(&mut w, FLAT_MAGIC, index.levels(), index.model())?;
    write_batches(&mut w, index.batches())?;
    Ok(w.0)
}

pub fn decode_flat(bytes: &[u8]) -> Result<FlatIndex> {
    let mut r = Reader::new(bytes);
    let (levels, model) = read_header(&mut r, FLAT_MAGIC)?;
    let batches = read_batches(&mut r, &levels)?;
    r.finish()?;
    Ok(FlatIndex::from_parts(levels, model, batches))
}

pub fn encode_ivf(index: &IvfFlatIndex) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    write_header(&mut w, IVF_MAGIC, index.levels(), index.model())?;
    w.u64(index.seed());
    w.len_u32(index.len())?;
    w.len_u32(index.n_list())?;
    w.f32s(index.centroids().as_slice());
    for list in index.lists() {
        write_batches(&mut w, list)?;
    }
    Ok(w.0)
}

pub fn decode_ivf(bytes: &[u8]) -> Result<IvfFlatIndex> {
    let mut r = Reader::new(bytes);
    let (levels, model) = read_header(&mut r, IVF_MAGIC)?;
    let seed = r.u64()?;
    let n = r.u32()? as usize;
    let n_list = r.u32()? as usize;
    if n_list == 0 {
        return Err(Error::Format("IVF index without clusters".into()));
    }
    let centroids = VectorSet::new(levels.dim(), r.f32s(n_list * levels.dim())?)?;
    let mut assignment = vec![u32::MAX; n];
    let mut lists = Vec::with_capacity(n_list);
    for c in 0..n_list {
        let list = read_batches(&mut r, &levels)?;
        for &id in list.iter().flat_map(|b| b.ids()) {
            let slot = assignment
                .get_mut(id as usize)
                .ok_or_else(|| Error::Format(format!("vector id {id} out of range")))?;
            if *slot != u32::MAX {
                return Err(Error::Format(format!("vector {id} listed twice")));
            }
            *slot = c as u32;
        }
        lists.push(list);
    }
    if assignment.contains(&u32::MAX) {
        return Err(Error::Format("some vectors belong to no cluster".into()));
    }
    r.finish()?;
    Ok(IvfFlatIndex {
        levels,
        model,
        centroids,
        lists,
        assignment,
        seed,
    })
}

pub fn encode_hnsw(index: &HnswIndex) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    write_header(&mut w, HNSW_MAGIC, index.levels(), index.model())?;
    let p = index.params();
    w.len_u32(p.m)?;
    w.len_u32(p.ef_construction)?;
    w.u64(p.seed);
    w.u32(index.entry);
    w.len_u32(index.len())?;
    w.f32s(index.data.coefficients());
    for node in &index.links {
        w.u8(u8::try_from(node.len()).map_err(|_| Error::Format("too many layers".into()))?);
        for layer in node {
            w.len_u32(layer.len())?;
            w.u32s(layer);
        }
    }
    Ok(w.0)
}

pub fn decode_hnsw(bytes: &[u8]) -> Result<HnswIndex> {
    let mut r = Reader::new(bytes);
    let (levels, model) = read_header(&mut r, HNSW_MAGIC)?;
    let params = HnswParams {
        m: r.u32()? as usize,
        ef_construction: r.u32()? as usize,
        seed: r.u64()?,
    };
    let entry = r.u32()?;
    let n = r.u32()? as usize;
    let coeffs = VectorSet::new(levels.dim(), r.f32s(n * levels.dim())?)?;
    let data = TransformedDataset::from_coefficients(coeffs, levels)?;
    let mut links = Vec::with_capacity(n);
    for _ in 0..n {
        let layers = r.u8()? as usize;
        let mut node = Vec::with_capacity(layers);
        for _ in 0..layers {
            let count = r.u32()? as usize;
            node.push(r.u32s(count)?);
        }
        links.push(node);
    }
    r.finish()?;
    HnswIndex::from_parts(params, model, data, links, entry)
}

macro_rules! file_io {
    ($save:ident, $load:ident, $ty:ty, $enc:ident, $dec:ident) => {
        pub fn $save(path: impl AsRef<Path>, index: &$ty) -> Result<()> {
            Ok(fs::write(path, $enc(index)?)?)
        }

        pub fn $load(path: impl AsRef<Path>) -> Result<$ty> {
            $dec(&fs::read(path)?)
        }
    };
}

file_io!(save_flat, load_flat, FlatIndex, encode_flat, decode_flat);
file_io!(save_ivf, load_ivf, IvfFlatIndex, encode_ivf, decode_ivf);
file_io!(save_hnsw, load_hnsw, HnswIndex, encode_hnsw, decode_hnsw);

/// Any of the index kinds, identified by its magic.
#[derive(Debug, Clone)]
pub enum AnyIndex {
    Flat(FlatIndex),
    Ivf(IvfFlatIndex),
    Hnsw(HnswIndex),
}

pub fn load_index(path: impl AsRef<Path>) -> Result<AnyIndex> {
    let bytes = fs::read(path)?;
    match bytes.get(..5) {
        Some(m) if m == FLAT_MAGIC => decode_flat(&bytes).map(AnyIndex::Flat),
        Some(m) if m == IVF_MAGIC => decode_ivf(&bytes).map(AnyIndex::Ivf),
        Some(m) if m == HNSW_MAGIC => decode_hnsw(&bytes).map(AnyIndex::Hnsw),
        _ => Err(Error::Format("not an index file".into())),
    }
}
