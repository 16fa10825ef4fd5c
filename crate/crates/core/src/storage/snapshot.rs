//! Index snapshots.
//!
//! ```text
//! offset    size      field
//! 0         4         magic "VSIX"
//! 4         4         format_version (u32, = 1)
//! 8         4         index kind (u32: 0 flat, 1 ivf, 2 hnsw)
//! 12        4         dim (u32)
//! 16        8         body_len (u64)
//! 24        body_len  body
//! 24+len    4         CRC-32 (IEEE) of body
//! ```
//!
//! Bodies, all little-endian:
//!
//! - flat: `count u64 | ids [u64; count] | vectors [f32; count*dim]`
//! - ivf: `nlist u32 | count u64 | centroids [f32; nlist*dim] | ids | vectors
//!   | assignment [u32; count]`
//! - hnsw: `M u32 | ef_construction u32 | capacity u64 | seed u64 | count u64
//!   | entry u64 (u64::MAX if empty) | ids | vectors | levels [u8; count]`,
//!   then for each node and each layer `0..=level`: `degree u32 | [u32; degree]`

use std::path::Path;

use crate::error::{Error, Result};
use crate::index::flat::FlatIndex;
use crate::index::hnsw::{HnswIndex, HnswParams};
use crate::index::ivf::IvfIndex;
use crate::index::{DocId, Rows};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"VSIX";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Flat,
    Ivf,
    Hnsw,
}

impl IndexKind {
    fn tag(self) -> u32 {
        match self {
            IndexKind::Flat => 0,
            IndexKind::Ivf => 1,
            IndexKind::Hnsw => 2,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(IndexKind::Flat),
            1 => Ok(IndexKind::Ivf),
            2 => Ok(IndexKind::Hnsw),
            t => Err(Error::Corrupt(format!("unknown index kind tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Flat => "flat",
            IndexKind::Ivf => "ivf",
            IndexKind::Hnsw => "hnsw",
        }
    }
}

/// An index type with a snapshot body encoding.
pub trait Snapshot: Sized {
    const KIND: IndexKind;
    fn snapshot_dim(&self) -> usize;
    fn encode_body(&self, out: &mut Vec<u8>) -> Result<()>;
    fn decode_body(dim: usize, body: &mut Reader<'_>) -> Result<Self>;
}

#[derive(Debug, Clone)]
pub enum AnyIndex {
    Flat(FlatIndex),
    Ivf(IvfIndex),
    Hnsw(HnswIndex),
}

impl AnyIndex {
    pub fn kind(&self) -> IndexKind {
        match self {
            AnyIndex::Flat(_) => IndexKind::Flat,
            AnyIndex::Ivf(_) => IndexKind::Ivf,
            AnyIndex::Hnsw(_) => IndexKind::Hnsw,
        }
    }
}

pub fn save_index<I: Snapshot>(path: impl AsRef<Path>, index: &I) -> Result<()> {
    super::atomic_write(path.as_ref(), &encode(index)?)
}

/// Loads a snapshot that must hold an index of type `I`.
pub fn load_index<I: Snapshot>(path: impl AsRef<Path>) -> Result<I> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn load_any(path: impl AsRef<Path>) -> Result<AnyIndex> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (kind, _, _) = verify(&bytes)?;
    Ok(match kind {
        IndexKind::Flat => AnyIndex::Flat(decode(&bytes)?),
        IndexKind::Ivf => AnyIndex::Ivf(decode(&bytes)?),
        IndexKind::Hnsw => AnyIndex::Hnsw(decode(&bytes)?),
    })
}

pub(crate) fn encode<I: Snapshot>(index: &I) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    index.encode_body(&mut body)?;
    let dim = u32::try_from(index.snapshot_dim())
        .map_err(|_| Error::InvalidParam("dim exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + body.len() + 4);
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&I::KIND.tag().to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    Ok(out)
}

/// Checks framing and checksum; returns the kind, dim and body.
fn verify(bytes: &[u8]) -> Result<(IndexKind, usize, &[u8])> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let mut header = Reader::new(&bytes[..HEADER_LEN]);
    let magic: [u8; 4] = header.take(4)?.try_into().unwrap();
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::BadMagic {
            expected: SNAPSHOT_MAGIC,
            found: magic,
        });
    }
    let version = header.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let tag = header.u32()?;
    let dim = header.u32()? as usize;
    let body_len = header.u64()?;
    let expected = HEADER_LEN as u64 + body_len + 4;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(Error::Corrupt(format!("{} trailing bytes", found - expected)));
    }
    let body = &bytes[HEADER_LEN..HEADER_LEN + body_len as usize];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Ok((IndexKind::from_tag(tag)?, dim, body))
}

pub(crate) fn decode<I: Snapshot>(bytes: &[u8]) -> Result<I> {
    let (kind, dim, body) = verify(bytes)?;
    if kind != I::KIND {
        return Err(Error::TypeMismatch {
            expected: I::KIND.name(),
            found: kind.name(),
        });
    }
    let mut reader = Reader::new(body);
    let index = I::decode_body(dim, &mut reader)?;
    if !reader.is_empty() {
        return Err(Error::Corrupt("unread bytes at end of snapshot body".into()));
    }
    Ok(index)
}

/// Bounds-checked little-endian cursor.
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.buf.len() {
            return Err(Error::Corrupt("snapshot body ends early".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8s(&mut self, n: usize) -> Result<Vec<u8>> {
        Ok(self.take(n)?.to_vec())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len_prefix(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| Error::Corrupt("count overflows".into()))?;
        if n.saturating_mul(elem_size) > self.buf.len() {
            return Err(Error::Corrupt("count exceeds body size".into()));
        }
        Ok(n)
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u64s(&mut self, n: usize) -> Result<Vec<u64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(overflow)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn rows(&mut self, dim: usize, count: usize) -> Result<Rows> {
        let ids = self.u64s(count)?.into_iter().map(DocId).collect();
        let data = self.f32s(count.checked_mul(dim).ok_or_else(overflow)?)?;
        Rows::from_parts(dim, ids, data)
    }
}

fn overflow() -> Error {
    Error::Corrupt("size overflows".into())
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_rows(out: &mut Vec<u8>, rows: &Rows) {
    for id in &rows.ids {
        put_u64(out, id.0);
    }
    for v in &rows.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn require_frozen(frozen: bool) -> Result<()> {
    if frozen {
        Ok(())
    } else {
        Err(Error::NotFrozen)
    }
}

impl Snapshot for FlatIndex {
    const KIND: IndexKind = IndexKind::Flat;

    fn snapshot_dim(&self) -> usize {
        self.dim()
    }

    fn encode_body(&self, out: &mut Vec<u8>) -> Result<()> {
        require_frozen(self.frozen)?;
        put_u64(out, self.len() as u64);
        put_rows(out, &self.rows);
        Ok(())
    }

    fn decode_body(dim: usize, body: &mut Reader<'_>) -> Result<Self> {
        let count = body.len_prefix(8 + 4 * dim)?;
        let rows = body.rows(dim, count)?;
        Ok(FlatIndex { rows, frozen: true })
    }
}

impl Snapshot for IvfIndex {
    const KIND: IndexKind = IndexKind::Ivf;

    fn snapshot_dim(&self) -> usize {
        self.dim()
    }

    fn encode_body(&self, out: &mut Vec<u8>) -> Result<()> {
        require_frozen(self.frozen)?;
        if !self.trained {
            return Err(Error::NotTrained);
        }
        put_u32(out, self.nlist as u32);
        put_u64(out, self.len() as u64);
        for v in &self.centroids {
            out.extend_from_slice(&v.to_le_bytes());
        }
        put_rows(out, &self.rows);
        for &a in &self.assignment {
            put_u32(out, a);
        }
        Ok(())
    }

    fn decode_body(dim: usize, body: &mut Reader<'_>) -> Result<Self> {
        let nlist = body.u32()? as usize;
        let count = body.len_prefix(8 + 4 * dim + 4)?;
        let mut index = IvfIndex::new(dim, nlist).map_err(|e| Error::Corrupt(e.to_string()))?;
        index.centroids = body.f32s(nlist.checked_mul(dim).ok_or_else(overflow)?)?;
        index.rows = body.rows(dim, count)?;
        index.assignment = body.u32s(count)?;
        for (pos, &bucket) in index.assignment.iter().enumerate() {
            let list = index
                .lists
                .get_mut(bucket as usize)
                .ok_or_else(|| Error::Corrupt(format!("bucket {bucket} out of range")))?;
            list.push(pos as u32);
        }
        index.trained = true;
        index.frozen = true;
        Ok(index)
    }
}

impl Snapshot for HnswIndex {
    const KIND: IndexKind = IndexKind::Hnsw;

    fn snapshot_dim(&self) -> usize {
        self.dim()
    }

    fn encode_body(&self, out: &mut Vec<u8>) -> Result<()> {
        require_frozen(self.frozen)?;
        let p = &self.params;
        put_u32(out, p.m as u32);
        put_u32(out, p.ef_construction as u32);
        put_u64(out, p.capacity as u64);
        put_u64(out, p.seed);
        put_u64(out, self.len() as u64);
        put_u64(out, self.entry_point.map_or(u64::MAX, u64::from));
        put_rows(out, &self.rows);
        out.extend_from_slice(&self.levels);
        for layers in &self.links {
            for nbrs in layers {
                put_u32(out, nbrs.len() as u32);
                for &nb in nbrs {
                    put_u32(out, nb);
                }
            }
        }
        Ok(())
    }

    fn decode_body(dim: usize, body: &mut Reader<'_>) -> Result<Self> {
        let params = HnswParams {
            m: body.u32()? as usize,
            ef_construction: body.u32()? as usize,
            capacity: body.u64()? as usize,
            seed: body.u64()?,
        };
        let count = body.len_prefix(8 + 4 * dim + 1)?;
        let entry = match body.u64()? {
            u64::MAX => None,
            e => Some(u32::try_from(e).map_err(|_| overflow())?),
        };
        let rows = body.rows(dim, count)?;
        let levels = body.u8s(count)?;
        let mut links = Vec::with_capacity(count);
        for &level in &levels {
            let mut layers = Vec::with_capacity(level as usize + 1);
            for _ in 0..=level {
                let degree = body.u32()? as usize;
                layers.push(body.u32s(degree)?);
            }
            links.push(layers);
        }
        HnswIndex::from_parts(params, rows, levels, links, entry)
    }
}
