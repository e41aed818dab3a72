//! Interconnect trees and the physical parameterization of Korhonen's
//! stress equation.
//!
//! Geometry is in micrometres on a 256 x 256 um canvas. Physical quantities
//! are SI (Pa, m^2/s, A/m^2) unless a name says otherwise.

mod format;
mod params;
mod validate;

pub use format::{parse_tree, read_tree, write_tree, TREE_MAGIC};
pub use params::{
    atomic_diffusivity, diffusivity, driving_force, driving_force_for, stress_diffusivity,
    PhysicalParams, ELEMENTARY_CHARGE, K_BOLTZMANN_EV, K_BOLTZMANN_J,
};
pub use validate::{validate_tree, validate_tree_with, Subject, TreeLimits, Violation, ViolationKind};

use std::collections::BTreeMap;
use std::fmt;

/// Canvas edge length in um; one raster pixel is one um.
pub const CANVAS_UM: f64 = 256.0;

pub type NodeId = u32;
pub type BranchId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Junction,
    Terminal,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Junction => "junction",
            NodeKind::Terminal => "terminal",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub kind: NodeKind,
}

/// A straight wire segment between two nodes.
///
/// The local coordinate runs from the lower-coordinate node to the higher
/// one. A positive current density flows along +x (right or up).
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: BranchId,
    pub from: NodeId,
    pub to: NodeId,
    pub orientation: Orientation,
    /// um
    pub length: f64,
    /// um
    pub width: f64,
    /// A/m^2, signed
    pub current_density: f64,
}

/// Raw branch description as found in a tree file, before geometry is
/// resolved against node positions.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub id: BranchId,
    pub from: NodeId,
    pub to: NodeId,
    pub width: f64,
    pub current_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterconnectTree {
    pub design_id: u64,
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch>,
}

/// Axis-aligned half-open rectangle `[x0, x1) x [y0, y1)` in um.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x0: self.x0.max(other.x0),
            x1: self.x1.min(other.x1),
            y0: self.y0.max(other.y0),
            y1: self.y1.min(other.y1),
        };
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn expand(&self, by: f64) -> Rect {
        Rect { x0: self.x0 - by, x1: self.x1 + by, y0: self.y0 - by, y1: self.y1 + by }
    }
}

/// Offset of the first covered row/column below a wire's centreline.
/// A width-`w` wire at coordinate `c` covers `[c - off, c - off + w)`.
pub fn width_offset(width: f64) -> f64 {
    ((width - 1.0) / 2.0).floor().max(0.0)
}

impl InterconnectTree {
    /// Resolves branch orientation and length from node positions.
    ///
    /// Non-axis-aligned branches get `Horizontal` and the Manhattan
    /// distance as length; [`validate_tree`] reports them.
    pub fn from_specs(design_id: u64, nodes: Vec<Node>, specs: Vec<BranchSpec>) -> Self {
        let pos: BTreeMap<NodeId, (f64, f64)> = nodes.iter().map(|n| (n.id, (n.x, n.y))).collect();
        let branches = specs
            .into_iter()
            .map(|s| {
                let a = pos.get(&s.from).copied().unwrap_or((f64::NAN, f64::NAN));
                let b = pos.get(&s.to).copied().unwrap_or((f64::NAN, f64::NAN));
                let orientation =
                    if a.0 == b.0 && a.1 != b.1 { Orientation::Vertical } else { Orientation::Horizontal };
                Branch {
                    id: s.id,
                    from: s.from,
                    to: s.to,
                    orientation,
                    length: (a.0 - b.0).abs() + (a.1 - b.1).abs(),
                    width: s.width,
                    current_density: s.current_density,
                }
            })
            .collect();
        InterconnectTree { design_id, nodes, branches }
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn node_positions(&self) -> BTreeMap<NodeId, (f64, f64)> {
        self.nodes.iter().map(|n| (n.id, (n.x, n.y))).collect()
    }

    /// `(low, high)` node ids of a branch along its local coordinate.
    pub fn ends(&self, branch: &Branch) -> (NodeId, NodeId) {
        let (a, b) = match (self.node(branch.from), self.node(branch.to)) {
            (Some(a), Some(b)) => (a, b),
            _ => return (branch.from, branch.to),
        };
        let forward = match branch.orientation {
            Orientation::Horizontal => a.x <= b.x,
            Orientation::Vertical => a.y <= b.y,
        };
        if forward {
            (branch.from, branch.to)
        } else {
            (branch.to, branch.from)
        }
    }

    /// Node id -> indices into `branches` of incident branches.
    pub fn incidence(&self) -> BTreeMap<NodeId, Vec<usize>> {
        let mut map: BTreeMap<NodeId, Vec<usize>> = self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for (i, b) in self.branches.iter().enumerate() {
            map.entry(b.from).or_default().push(i);
            if b.to != b.from {
                map.entry(b.to).or_default().push(i);
            }
        }
        map
    }

    pub fn interior_junctions(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Junction).map(|n| n.id).collect()
    }

    /// Metal footprint of a branch.
    pub fn footprint(&self, branch: &Branch) -> Option<Rect> {
        let (lo, hi) = self.ends(branch);
        let (lo, hi) = (self.node(lo)?, self.node(hi)?);
        let off = width_offset(branch.width);
        Some(match branch.orientation {
            Orientation::Horizontal => Rect {
                x0: lo.x,
                x1: hi.x,
                y0: lo.y - off,
                y1: lo.y - off + branch.width,
            },
            Orientation::Vertical => Rect {
                x0: lo.x - off,
                x1: lo.x - off + branch.width,
                y0: lo.y,
                y1: hi.y,
            },
        })
    }

    /// Square around a node, sized by the widest incident branch, inside
    /// which footprints of branches sharing the node may overlap.
    pub fn junction_square(&self, node: NodeId) -> Option<Rect> {
        let n = self.node(node)?;
        let w = self
            .branches
            .iter()
            .filter(|b| b.from == node || b.to == node)
            .map(|b| b.width)
            .fold(1.0_f64, f64::max);
        let off = width_offset(w);
        Some(Rect { x0: n.x - off, x1: n.x - off + w, y0: n.y - off, y1: n.y - off + w })
    }

    /// Left-right mirror image about the canvas centre with every current
    /// reversed. The stress field of the mirror is the mirror of the field.
    pub fn mirrored(&self) -> InterconnectTree {
        let nodes: Vec<Node> = self.nodes.iter().map(|n| Node { x: CANVAS_UM - n.x, ..n.clone() }).collect();
        let specs = self
            .branches
            .iter()
            .map(|b| BranchSpec {
                id: b.id,
                from: b.from,
                to: b.to,
                width: b.width,
                current_density: match b.orientation {
                    Orientation::Horizontal => -b.current_density,
                    Orientation::Vertical => b.current_density,
                },
            })
            .collect();
        InterconnectTree::from_specs(self.design_id, nodes, specs)
    }
}

/// Hydrostatic stress sampled at cell centres of every branch and at every
/// interior junction, at a list of times.
#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    pub design_id: u64,
    /// Seconds; `f64::INFINITY` marks a steady-state snapshot.
    pub times: Vec<f64>,
    pub branch_ids: Vec<BranchId>,
    pub junction_ids: Vec<NodeId>,
    pub snapshots: Vec<StressSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressSnapshot {
    /// Pa at cell centres, one array per branch in `branch_ids` order.
    pub branches: Vec<Vec<f64>>,
    /// Pa, one value per node in `junction_ids` order.
    pub junctions: Vec<f64>,
}

impl StressField {
    pub fn time_index(&self, t_seconds: f64) -> Option<usize> {
        self.times.iter().position(|&t| t == t_seconds)
    }

    pub fn snapshot_at(&self, t_seconds: f64) -> Option<&StressSnapshot> {
        self.time_index(t_seconds).map(|i| &self.snapshots[i])
    }

    pub fn branch_values(&self, time_idx: usize, branch: BranchId) -> Option<&[f64]> {
        let b = self.branch_ids.iter().position(|&id| id == branch)?;
        Some(&self.snapshots.get(time_idx)?.branches[b])
    }
}
