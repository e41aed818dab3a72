//! `EMDS v1` sample container and train/test splitting.
//!
//! All numbers little-endian. Images are stored as footprint values only:
//! the mask run lengths followed by one f32 per wire pixel in storage
//! order, for the current image and then the stress image. Values are
//! physical (A/m^2, Pa); the normalization statistics live in the header.
//!
//! ```text
//! "EMDS" u32 version=1
//! u32 n_records  u32 reserved=0
//! 6 x f64  mean/std of current, stress, time
//! n_records x (u64 design_id, f64 years, u64 offset, u64 length)
//! records: u64 design_id, f64 years, u8 split (0 train, 1 test),
//!          u32 n_runs, n_runs x u32, u32 n_px, n_px x f32, n_px x f32
//! 32-byte SHA-256 of everything above
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use super::{ChannelKind, FieldImage, Mask, NormStats, SamplePair};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng, stream};

pub const DATASET_MAGIC: &[u8; 4] = b"EMDS";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 6 * 8;
const INDEX_ENTRY_LEN: usize = 32;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub split: Split,
    pub pair: SamplePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub stats: NormStats,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexEntry {
    pub design_id: u64,
    pub time: f64,
    pub offset: u64,
    pub length: u64,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn encode_record(r: &Record) -> Vec<u8> {
    let p = &r.pair;
    let mut out = Vec::new();
    put_u64(&mut out, p.design_id);
    put_f64(&mut out, p.time);
    out.push(match r.split {
        Split::Train => 0,
        Split::Test => 1,
    });
    let runs = p.input.mask.to_runs();
    put_u32(&mut out, runs.len() as u32);
    runs.iter().for_each(|&r| put_u32(&mut out, r));
    put_u32(&mut out, p.input.mask.count() as u32);
    for v in p.input.wire_values().chain(p.target.wire_values()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Incremental encoder; records are appended in the order they will appear
/// in the file.
#[derive(Debug, Default)]
pub struct DatasetBuilder {
    entries: Vec<(u64, f64, u64)>,
    bodies: Vec<u8>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: &Record) -> Result<()> {
        let p = &record.pair;
        if p.input.mask != p.target.mask {
            log::error!("design {} t={}: input and target masks differ", p.design_id, p.time);
            return Err(Error::MaskMismatch);
        }
        let body = encode_record(record);
        self.entries.push((p.design_id, p.time, body.len() as u64));
        self.bodies.extend_from_slice(&body);
        Ok(())
    }

    /// Moves all records of `other` to the end of `self`.
    pub fn append(&mut self, other: DatasetBuilder) {
        self.entries.extend(other.entries);
        self.bodies.extend_from_slice(&other.bodies);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn finish(self, stats: &NormStats) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + INDEX_ENTRY_LEN * self.entries.len() + self.bodies.len() + 32);
        out.extend_from_slice(DATASET_MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, self.entries.len() as u32);
        put_u32(&mut out, 0);
        let s = stats;
        for v in [s.mean_current, s.std_current, s.mean_stress, s.std_stress, s.mean_time, s.std_time] {
            put_f64(&mut out, v);
        }
        let mut offset = (HEADER_LEN + INDEX_ENTRY_LEN * self.entries.len()) as u64;
        for &(design_id, time, len) in &self.entries {
            put_u64(&mut out, design_id);
            put_f64(&mut out, time);
            put_u64(&mut out, offset);
            put_u64(&mut out, len);
            offset += len;
        }
        out.extend_from_slice(&self.bodies);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }
}

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut b = DatasetBuilder::new();
    for r in &ds.records {
        b.push(r)?;
    }
    Ok(b.finish(&ds.stats))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corrupt("EMDS: record runs past end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
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
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Corrupt("EMDS: pixel count overflow".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// A verified container held in memory; records are decoded on demand.
#[derive(Debug, Clone)]
pub struct DatasetReader {
    bytes: Vec<u8>,
    stats: NormStats,
    index: Vec<IndexEntry>,
    lookup: BTreeMap<(u64, u64), usize>,
}

impl DatasetReader {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != DATASET_MAGIC {
            return Err(Error::Corrupt("not an EMDS file".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Version { format: "EMDS", found: format!("v{version}") });
        }
        if bytes.len() < HEADER_LEN + DIGEST_LEN {
            return Err(Error::Checksum);
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checksum);
        }
        let mut c = Cursor { buf: body, pos: 8 };
        let n = c.u32()? as usize;
        c.u32()?;
        let mut s = [0.0; 6];
        for v in &mut s {
            *v = c.f64()?;
        }
        let stats = NormStats {
            mean_current: s[0],
            std_current: s[1],
            mean_stress: s[2],
            std_stress: s[3],
            mean_time: s[4],
            std_time: s[5],
        };
        if n.saturating_mul(INDEX_ENTRY_LEN) > body.len() {
            return Err(Error::Corrupt("EMDS: index larger than file".into()));
        }
        let mut index = Vec::with_capacity(n);
        let mut lookup = BTreeMap::new();
        for i in 0..n {
            let e = IndexEntry { design_id: c.u64()?, time: c.f64()?, offset: c.u64()?, length: c.u64()? };
            let in_range = e.offset.checked_add(e.length).is_some_and(|end| end <= body.len() as u64);
            if !in_range || (e.offset as usize) < HEADER_LEN + n * INDEX_ENTRY_LEN {
                return Err(Error::Corrupt(format!("EMDS: index entry {i} out of range")));
            }
            lookup.entry((e.design_id, e.time.to_bits())).or_insert(i);
            index.push(e);
        }
        Ok(DatasetReader { bytes, stats, index, lookup })
    }

    pub fn open(path: &Path) -> Result<Self> {
        Self::from_bytes(fs::read(path).map_err(Error::io_at(path))?)
    }

    pub fn stats(&self) -> NormStats {
        self.stats
    }

    pub fn index(&self) -> &[IndexEntry] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// SHA-256 trailer of the container.
    pub fn digest(&self) -> [u8; 32] {
        self.bytes[self.bytes.len() - DIGEST_LEN..].try_into().unwrap()
    }

    pub fn record(&self, i: usize) -> Result<Record> {
        let e = self.index[i];
        let buf = &self.bytes[e.offset as usize..(e.offset + e.length) as usize];
        let mut c = Cursor { buf, pos: 0 };
        let design_id = c.u64()?;
        let time = c.f64()?;
        if design_id != e.design_id || time.to_bits() != e.time.to_bits() {
            return Err(Error::Corrupt(format!("EMDS: record {i} does not match its index entry")));
        }
        let split = match c.u8()? {
            0 => Split::Train,
            1 => Split::Test,
            other => return Err(Error::Corrupt(format!("EMDS: bad split flag {other}"))),
        };
        let n_runs = c.u32()? as usize;
        if n_runs > buf.len() / 4 {
            return Err(Error::Corrupt("EMDS: run count larger than record".into()));
        }
        let runs = (0..n_runs).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
        let mask = Mask::from_runs(&runs)?;
        let n_px = c.u32()? as usize;
        let current = c.f32s(n_px)?;
        let stress = c.f32s(n_px)?;
        if c.pos != buf.len() {
            return Err(Error::Corrupt(format!("EMDS: record {i} has trailing bytes")));
        }
        let input = FieldImage::from_wire_values(ChannelKind::Current, design_id, None, mask.clone(), &current)?;
        let target = FieldImage::from_wire_values(ChannelKind::Stress, design_id, Some(time), mask, &stress)?;
        Ok(Record { split, pair: SamplePair { design_id, input, time, target } })
    }

    /// Record for `(design_id, years)` via the index table.
    pub fn get(&self, design_id: u64, years: f64) -> Result<Option<Record>> {
        self.lookup.get(&(design_id, years.to_bits())).map(|&i| self.record(i)).transpose()
    }

    pub fn into_dataset(self) -> Result<Dataset> {
        let records = (0..self.len()).map(|i| self.record(i)).collect::<Result<Vec<_>>>()?;
        Ok(Dataset { stats: self.stats, records })
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    DatasetReader::from_bytes(bytes.to_vec())?.into_dataset()
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    DatasetReader::open(path)?.into_dataset()
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Writes the container through a temporary file and an atomic rename,
/// holding `<path>.lock` for the duration. Returns the SHA-256 trailer.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<[u8; 32]> {
    write_dataset_bytes(path, &encode_dataset(ds)?)
}

/// As [`write_dataset`], for an already encoded container.
pub fn write_dataset_bytes(path: &Path, bytes: &[u8]) -> Result<[u8; 32]> {
    if bytes.len() < HEADER_LEN + DIGEST_LEN || &bytes[..4] != DATASET_MAGIC {
        return Err(Error::Corrupt("refusing to write something that is not an EMDS container".into()));
    }
    let lock = sibling(path, ".lock");
    match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(Error::Locked(lock)),
        Err(e) => return Err(Error::io_at(&lock)(e)),
    }
    let _guard = LockGuard(lock);
    let tmp = sibling(path, ".tmp");
    fs::write(&tmp, bytes).map_err(Error::io_at(&tmp))?;
    fs::rename(&tmp, path).map_err(Error::io_at(path))?;
    Ok(bytes[bytes.len() - DIGEST_LEN..].try_into().unwrap())
}

/// Splits design ids into `(train, test)`, both sorted.
///
/// The test side gets `round(test_fraction * n)` designs, kept between 1
/// and `n - 1` when there are at least two.
///
/// # Panics
/// If `test_fraction` is not in (0, 1).
pub fn split_by_design(designs: &[u64], test_fraction: f64, seed: u64) -> (Vec<u64>, Vec<u64>) {
    assert!(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    let mut ids: Vec<u64> = designs.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let n = ids.len();
    let mut n_test = (test_fraction * n as f64).round() as usize;
    if n >= 2 {
        n_test = n_test.clamp(1, n - 1);
    }
    ids.shuffle(&mut rng(derive_seed(seed ^ stream::SPLIT, 0)));
    let mut test = ids.split_off(n - n_test);
    ids.sort_unstable();
    test.sort_unstable();
    (ids, test)
}
