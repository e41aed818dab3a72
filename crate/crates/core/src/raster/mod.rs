//! 256 x 256 single-channel images of designs and stress fields.
//!
//! Pixel `(x, y)` covers `[x, x+1) x [y, y+1)` um and is stored at index
//! `y * 256 + x`. A pixel belongs to a branch when its centre lies in the
//! branch footprint; where footprints overlap (junction squares) the branch
//! with the lowest id wins.

mod dataset;
mod norm;
mod render;

pub use dataset::{
    decode_dataset, encode_dataset, read_dataset, split_by_design, write_dataset, write_dataset_bytes, Dataset, DatasetBuilder, DatasetReader, IndexEntry,
    Record, Split, DATASET_MAGIC,
};
pub use norm::{Moments, NormStats, SamplePair};
pub use render::{render_png, write_png, Palette, Rendered};

use crate::error::{Error, Result};
use crate::model::{InterconnectTree, Orientation, StressField};
use crate::solver::SECONDS_PER_YEAR;

pub const IMAGE_SIZE: usize = 256;
pub const N_PIXELS: usize = IMAGE_SIZE * IMAGE_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Current,
    Stress,
}

/// Wire footprint: which pixels carry metal.
#[derive(Clone, PartialEq, Eq)]
pub struct Mask {
    bits: Vec<bool>,
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mask({} px)", self.count())
    }
}

impl Mask {
    pub fn empty() -> Self {
        Mask { bits: vec![false; N_PIXELS] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), N_PIXELS);
        Mask { bits }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * IMAGE_SIZE + x]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of footprint pixels in storage order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + Clone + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Run lengths in storage order, alternating off/on and starting with
    /// an off run (possibly of length 0).
    pub fn to_runs(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &b in &self.bits {
            if b != current {
                runs.push(len);
                current = b;
                len = 0;
            }
            len += 1;
        }
        runs.push(len);
        runs
    }

    pub fn from_runs(runs: &[u32]) -> Result<Self> {
        let mut bits = Vec::with_capacity(N_PIXELS);
        for (i, &r) in runs.iter().enumerate() {
            if bits.len() + r as usize > N_PIXELS {
                return Err(Error::Corrupt("mask runs exceed image size".into()));
            }
            bits.extend(std::iter::repeat_n(i % 2 == 1, r as usize));
        }
        if bits.len() != N_PIXELS {
            return Err(Error::Corrupt("mask runs do not cover the image".into()));
        }
        Ok(Mask { bits })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldImage {
    pub kind: ChannelKind,
    pub design_id: u64,
    /// Years; `None` for current images.
    pub time: Option<f64>,
    /// Row-major, `N_PIXELS` values, exactly 0 outside `mask`.
    pub pixels: Vec<f32>,
    pub mask: Mask,
}

impl FieldImage {
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * IMAGE_SIZE + x]
    }

    /// Values on the footprint in storage order.
    pub fn wire_values(&self) -> impl Iterator<Item = f32> + Clone + '_ {
        self.mask.indices().map(|i| self.pixels[i])
    }

    /// Builds an image from footprint values in storage order.
    pub fn from_wire_values(
        kind: ChannelKind,
        design_id: u64,
        time: Option<f64>,
        mask: Mask,
        values: &[f32],
    ) -> Result<Self> {
        if values.len() != mask.count() {
            return Err(Error::Corrupt(format!("{} values for a {}-pixel footprint", values.len(), mask.count())));
        }
        let mut pixels = vec![0.0; N_PIXELS];
        for (i, &v) in mask.indices().zip(values) {
            pixels[i] = v;
        }
        Ok(FieldImage { kind, design_id, time, pixels, mask })
    }
}

/// For every pixel, the index into `tree.branches` of the branch that owns
/// it.
pub fn pixel_owners(tree: &InterconnectTree) -> Result<Vec<Option<usize>>> {
    let mut order: Vec<usize> = (0..tree.branches.len()).collect();
    order.sort_by_key(|&i| tree.branches[i].id);
    let mut owners = vec![None; N_PIXELS];
    let edge = IMAGE_SIZE as f64;
    for bi in order {
        let b = &tree.branches[bi];
        let r = tree.footprint(b).ok_or(Error::OutsideCanvas(b.id))?;
        if r.x0 < 0.0 || r.y0 < 0.0 || r.x1 > edge || r.y1 > edge {
            return Err(Error::OutsideCanvas(b.id));
        }
        // pixel p is covered when lo <= p + 0.5 < hi
        let span = |lo: f64, hi: f64| ((lo - 0.5).ceil() as usize)..((hi - 0.5).ceil() as usize);
        for y in span(r.y0, r.y1) {
            for x in span(r.x0, r.x1) {
                owners[y * IMAGE_SIZE + x].get_or_insert(bi);
            }
        }
    }
    Ok(owners)
}

fn mask_of(owners: &[Option<usize>]) -> Mask {
    Mask { bits: owners.iter().map(Option::is_some).collect() }
}

pub fn rasterize_current(tree: &InterconnectTree) -> Result<FieldImage> {
    let owners = pixel_owners(tree)?;
    let pixels = owners.iter().map(|o| o.map_or(0.0, |bi| tree.branches[bi].current_density as f32)).collect();
    Ok(FieldImage { kind: ChannelKind::Current, design_id: tree.design_id, time: None, pixels, mask: mask_of(&owners) })
}

/// Index into `field.times` of the snapshot at `years`, allowing for
/// rounding in the year-to-second conversion.
pub fn find_time(field: &StressField, years: f64) -> Result<usize> {
    let target = years * SECONDS_PER_YEAR;
    field
        .times
        .iter()
        .position(|&t| t == target || (t - target).abs() <= 1e-9 * target.abs())
        .ok_or(Error::MissingTime(target))
}

/// Each wire pixel takes the stress of the cell whose extent along the
/// branch contains the pixel centre.
pub fn rasterize_stress(tree: &InterconnectTree, field: &StressField, years: f64) -> Result<FieldImage> {
    let ti = find_time(field, years)?;
    let owners = pixel_owners(tree)?;
    let snapshot = &field.snapshots[ti];
    let mut cells = Vec::with_capacity(tree.branches.len());
    for b in &tree.branches {
        let k = field.branch_ids.iter().position(|&id| id == b.id);
        let values = k.map(|k| &snapshot.branches[k]).ok_or_else(|| {
            Error::Corrupt(format!("stress field of design {} has no branch {}", field.design_id, b.id))
        })?;
        let lo = tree.node(tree.ends(b).0).ok_or(Error::OutsideCanvas(b.id))?;
        cells.push((values, lo.x, lo.y));
    }
    let mut pixels = vec![0.0; N_PIXELS];
    for (i, owner) in owners.iter().enumerate() {
        let Some(bi) = *owner else { continue };
        let b = &tree.branches[bi];
        let (values, x0, y0) = cells[bi];
        let n = values.len();
        let (px, py) = ((i % IMAGE_SIZE) as f64 + 0.5, (i / IMAGE_SIZE) as f64 + 0.5);
        let along = match b.orientation {
            Orientation::Horizontal => px - x0,
            Orientation::Vertical => py - y0,
        };
        let k = ((along / b.length * n as f64).floor().max(0.0) as usize).min(n - 1);
        pixels[i] = values[k] as f32;
    }
    Ok(FieldImage {
        kind: ChannelKind::Stress,
        design_id: tree.design_id,
        time: Some(years),
        pixels,
        mask: mask_of(&owners),
    })
}
