//! `EMSTRESS v1` binary stress files. All integers and floats little-endian.
//!
//! ```text
//! "EMSTRESS"  u32 version=1
//! u64 design_id  u32 n_times  u32 n_branches  u32 n_junctions
//! n_branches x (u32 branch_id, u32 n_cells)
//! n_junctions x u32 node_id
//! n_times x f64 time_s
//! n_times x ( per branch: n_cells x f64 ; n_junctions x f64 )
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{StressField, StressSnapshot};

pub const STRESS_MAGIC: &[u8; 8] = b"EMSTRESS";
const VERSION: u32 = 1;

pub fn encode_stress(field: &StressField) -> Vec<u8> {
    let cells: Vec<usize> = field.snapshots.first().map(|s| s.branches.iter().map(Vec::len).collect()).unwrap_or_else(
        || vec![0; field.branch_ids.len()],
    );
    let mut out = Vec::new();
    out.extend_from_slice(STRESS_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&field.design_id.to_le_bytes());
    out.extend_from_slice(&(field.times.len() as u32).to_le_bytes());
    out.extend_from_slice(&(field.branch_ids.len() as u32).to_le_bytes());
    out.extend_from_slice(&(field.junction_ids.len() as u32).to_le_bytes());
    for (id, n) in field.branch_ids.iter().zip(&cells) {
        out.extend_from_slice(&id.to_le_bytes());
        out.extend_from_slice(&(*n as u32).to_le_bytes());
    }
    for id in &field.junction_ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
    for t in &field.times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for snap in &field.snapshots {
        for v in snap.branches.iter().flatten().chain(&snap.junctions) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corrupt("EMSTRESS: unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
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
}

pub fn decode_stress(buf: &[u8]) -> Result<StressField> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8).ok() != Some(&STRESS_MAGIC[..]) {
        return Err(Error::Corrupt("not an EMSTRESS file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Version { format: "EMSTRESS", found: format!("v{version}") });
    }
    let design_id = r.u64()?;
    let n_times = r.u32()? as usize;
    let n_branches = r.u32()? as usize;
    let n_junctions = r.u32()? as usize;
    // cheap sanity bound before allocating
    if n_branches * 8 + n_junctions * 4 > buf.len() {
        return Err(Error::Corrupt("EMSTRESS: header counts exceed file size".into()));
    }
    let mut branch_ids = Vec::with_capacity(n_branches);
    let mut cells = Vec::with_capacity(n_branches);
    for _ in 0..n_branches {
        branch_ids.push(r.u32()?);
        cells.push(r.u32()? as usize);
    }
    let junction_ids = (0..n_junctions).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let times = (0..n_times).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let mut snapshots = Vec::with_capacity(n_times);
    for _ in 0..n_times {
        let branches = cells
            .iter()
            .map(|&n| (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let junctions = (0..n_junctions).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        snapshots.push(StressSnapshot { branches, junctions });
    }
    if r.pos != buf.len() {
        return Err(Error::Corrupt(format!("EMSTRESS: {} trailing bytes", buf.len() - r.pos)));
    }
    Ok(StressField { design_id, times, branch_ids, junction_ids, snapshots })
}

pub fn write_stress(path: &Path, field: &StressField) -> Result<()> {
    std::fs::write(path, encode_stress(field)).map_err(Error::io_at(path))
}

pub fn read_stress(path: &Path) -> Result<StressField> {
    decode_stress(&std::fs::read(path).map_err(Error::io_at(path))?)
}
