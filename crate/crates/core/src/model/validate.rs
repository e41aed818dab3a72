use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BranchId, InterconnectTree, NodeId, NodeKind, Orientation, PhysicalParams, Rect, CANVAS_UM};

/// Relative KCL residual above which a junction is reported.
pub const KCL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeLimits {
    /// A/m^2
    pub j_max: f64,
    /// um
    pub canvas: f64,
}

impl Default for TreeLimits {
    fn default() -> Self {
        TreeLimits { j_max: 1e9, canvas: CANVAS_UM }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subject {
    Tree,
    Node(NodeId),
    Branch(BranchId),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Tree => write!(f, "tree"),
            Subject::Node(id) => write!(f, "node {id}"),
            Subject::Branch(id) => write!(f, "branch {id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Empty,
    DuplicateId,
    NonFinite,
    OutsideCanvas,
    UnknownNode(NodeId),
    SelfLoop,
    NotAxisAligned,
    OrientationMismatch,
    NonPositiveLength,
    WidthBelowOne,
    CurrentLimit { j: f64, limit: f64 },
    TerminalDegree(usize),
    JunctionDegree(usize),
    Cycle,
    Disconnected { components: usize },
    Kcl { relative_residual: f64 },
    FootprintOutsideCanvas,
    Overlap(BranchId),
}

impl ViolationKind {
    /// Violations that break the graph or its geometry, as opposed to
    /// placement on the canvas or electrical consistency.
    pub fn is_structural(&self) -> bool {
        use ViolationKind::*;
        !matches!(self, OutsideCanvas | CurrentLimit { .. } | Kcl { .. } | FootprintOutsideCanvas | Overlap(_))
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        match self {
            Empty => write!(f, "tree has no branches"),
            DuplicateId => write!(f, "duplicate id"),
            NonFinite => write!(f, "non-finite value"),
            OutsideCanvas => write!(f, "position outside the canvas"),
            UnknownNode(n) => write!(f, "references unknown node {n}"),
            SelfLoop => write!(f, "connects a node to itself"),
            NotAxisAligned => write!(f, "endpoints are not axis-aligned"),
            OrientationMismatch => write!(f, "orientation disagrees with node positions"),
            NonPositiveLength => write!(f, "length must be positive"),
            WidthBelowOne => write!(f, "width below 1 um"),
            CurrentLimit { j, limit } => write!(f, "|j| = {j:e} exceeds limit {limit:e}"),
            TerminalDegree(d) => write!(f, "blocked terminal has degree {d}, expected 1"),
            JunctionDegree(d) => write!(f, "interior junction has degree {d}, expected >= 2"),
            Cycle => write!(f, "closes a cycle (graph is not a tree)"),
            Disconnected { components } => write!(f, "graph has {components} connected components"),
            Kcl { relative_residual } => write!(f, "KCL residual {relative_residual:e} (relative)"),
            FootprintOutsideCanvas => write!(f, "footprint extends past the canvas"),
            Overlap(other) => write!(f, "footprint overlaps branch {other}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub subject: Subject,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.kind)
    }
}

pub fn validate_tree(tree: &InterconnectTree, params: &PhysicalParams) -> Vec<Violation> {
    validate_tree_with(tree, params, &TreeLimits::default())
}

/// Checks every structural, electrical and geometric tree invariant.
/// An empty result means the tree is valid.
pub fn validate_tree_with(tree: &InterconnectTree, params: &PhysicalParams, limits: &TreeLimits) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |subject, kind| out.push(Violation { subject, kind });

    if tree.branches.is_empty() {
        push(Subject::Tree, ViolationKind::Empty);
    }

    let mut seen = BTreeSet::new();
    for n in &tree.nodes {
        if !seen.insert(n.id) {
            push(Subject::Node(n.id), ViolationKind::DuplicateId);
        }
        if !(n.x.is_finite() && n.y.is_finite()) {
            push(Subject::Node(n.id), ViolationKind::NonFinite);
        } else if n.x < 0.0 || n.y < 0.0 || n.x > limits.canvas || n.y > limits.canvas {
            push(Subject::Node(n.id), ViolationKind::OutsideCanvas);
        }
    }
    let pos = tree.node_positions();

    let mut seen = BTreeSet::new();
    // Branches whose geometry is sound enough for footprint / KCL checks.
    let mut sound = vec![true; tree.branches.len()];
    for (i, b) in tree.branches.iter().enumerate() {
        let s = Subject::Branch(b.id);
        if !seen.insert(b.id) {
            push(s, ViolationKind::DuplicateId);
        }
        if !(b.width.is_finite() && b.current_density.is_finite()) {
            push(s, ViolationKind::NonFinite);
            sound[i] = false;
            continue;
        }
        if b.width < 1.0 {
            push(s, ViolationKind::WidthBelowOne);
        }
        if b.current_density.abs() > limits.j_max {
            push(s, ViolationKind::CurrentLimit { j: b.current_density, limit: limits.j_max });
        }
        let (a, c) = match (pos.get(&b.from), pos.get(&b.to)) {
            (Some(a), Some(c)) => (*a, *c),
            (None, _) => {
                push(s, ViolationKind::UnknownNode(b.from));
                sound[i] = false;
                continue;
            }
            (_, None) => {
                push(s, ViolationKind::UnknownNode(b.to));
                sound[i] = false;
                continue;
            }
        };
        if b.from == b.to {
            push(s, ViolationKind::SelfLoop);
            sound[i] = false;
            continue;
        }
        let geometric = if a.1 == c.1 && a.0 != c.0 {
            Some(Orientation::Horizontal)
        } else if a.0 == c.0 && a.1 != c.1 {
            Some(Orientation::Vertical)
        } else {
            None
        };
        match geometric {
            None => {
                push(s, ViolationKind::NotAxisAligned);
                sound[i] = false;
            }
            Some(o) if o != b.orientation => {
                push(s, ViolationKind::OrientationMismatch);
                sound[i] = false;
            }
            Some(_) => {
                let len = (a.0 - c.0).abs() + (a.1 - c.1).abs();
                if !(b.length > 0.0) || (b.length - len).abs() > 1e-9 * len.max(1.0) {
                    push(s, ViolationKind::NonPositiveLength);
                    sound[i] = false;
                }
            }
        }
    }

    let incidence = tree.incidence();
    for n in &tree.nodes {
        let degree = incidence.get(&n.id).map_or(0, Vec::len);
        match n.kind {
            NodeKind::Terminal if degree != 1 => push(Subject::Node(n.id), ViolationKind::TerminalDegree(degree)),
            NodeKind::Junction if degree < 2 => push(Subject::Node(n.id), ViolationKind::JunctionDegree(degree)),
            _ => {}
        }
    }

    // Acyclicity and connectivity via union-find.
    let index: BTreeMap<NodeId, usize> = pos.keys().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for b in &tree.branches {
        let (Some(&u), Some(&v)) = (index.get(&b.from), index.get(&b.to)) else { continue };
        if u == v {
            continue;
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            push(Subject::Branch(b.id), ViolationKind::Cycle);
        } else {
            parent[ru] = rv;
        }
    }
    let components = (0..parent.len()).filter(|&i| find(&mut parent, i) == i).count();
    if components > 1 {
        push(Subject::Tree, ViolationKind::Disconnected { components });
    }

    // Signed current leaving each junction.
    for n in tree.nodes.iter().filter(|n| n.kind == NodeKind::Junction) {
        let mut sum = 0.0;
        let mut scale: f64 = 0.0;
        for &i in incidence.get(&n.id).into_iter().flatten() {
            if !sound[i] {
                continue;
            }
            let b = &tree.branches[i];
            let current = b.width * params.t_metal * b.current_density;
            let (low, _) = tree.ends(b);
            sum += if low == n.id { current } else { -current };
            scale = scale.max(current.abs());
        }
        if scale > 0.0 {
            let r = sum.abs() / scale;
            if r >= KCL_TOLERANCE {
                push(Subject::Node(n.id), ViolationKind::Kcl { relative_residual: r });
            }
        }
    }

    let canvas = Rect { x0: 0.0, x1: limits.canvas, y0: 0.0, y1: limits.canvas };
    let rects: Vec<Option<Rect>> = tree
        .branches
        .iter()
        .zip(&sound)
        .map(|(b, ok)| if *ok { tree.footprint(b) } else { None })
        .collect();
    for (b, r) in tree.branches.iter().zip(&rects) {
        if let Some(r) = r {
            if !canvas.contains_rect(r) {
                push(Subject::Branch(b.id), ViolationKind::FootprintOutsideCanvas);
            }
        }
    }
    for i in 0..tree.branches.len() {
        for k in (i + 1)..tree.branches.len() {
            let (Some(ri), Some(rk)) = (&rects[i], &rects[k]) else { continue };
            let Some(overlap) = ri.intersection(rk) else { continue };
            let (bi, bk) = (&tree.branches[i], &tree.branches[k]);
            let shared = [bi.from, bi.to].into_iter().find(|n| *n == bk.from || *n == bk.to);
            let allowed = shared
                .and_then(|n| tree.junction_square(n))
                .is_some_and(|sq| sq.contains_rect(&overlap));
            if !allowed {
                push(Subject::Branch(bi.id), ViolationKind::Overlap(bk.id));
            }
        }
    }

    out
}
