use crate::error::{Error, Result};
use crate::model::{BranchId, InterconnectTree, NodeId, NodeKind};

use super::SolverConfig;

/// What closes one end of a branch's cell row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    /// Zero-flux face.
    Blocked,
    /// Shared junction unknown, indexed into [`Mesh::junction_nodes`].
    Junction(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchCells {
    pub branch: BranchId,
    /// Global index of the first cell; cells are contiguous.
    pub offset: usize,
    pub n_cells: usize,
    /// um
    pub dx: f64,
    pub low: End,
    pub high: End,
}

/// Global unknown layout: all branch cells first, branch by branch, then one
/// unknown per interior junction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub branches: Vec<BranchCells>,
    pub junction_nodes: Vec<NodeId>,
    pub n_cells: usize,
}

impl Mesh {
    pub fn n_unknowns(&self) -> usize {
        self.n_cells + self.junction_nodes.len()
    }

    pub fn junction_index(&self, j: usize) -> usize {
        self.n_cells + j
    }

    /// Global indices touched by each branch's cells and end junctions.
    pub fn unknowns_of(&self, b: &BranchCells) -> impl Iterator<Item = usize> + '_ {
        let ends = [b.low, b.high].into_iter().filter_map(move |e| match e {
            End::Junction(j) => Some(self.junction_index(j)),
            End::Blocked => None,
        });
        (b.offset..b.offset + b.n_cells).chain(ends)
    }
}

/// Lays out cells and junction unknowns for `tree`.
///
/// Every branch length must be an integer multiple of `cfg.dx`.
pub fn build_mesh(tree: &InterconnectTree, cfg: &SolverConfig) -> Result<Mesh> {
    cfg.validate()?;
    let junction_nodes: Vec<NodeId> =
        tree.nodes.iter().filter(|n| n.kind == NodeKind::Junction).map(|n| n.id).collect();
    let end_of = |node: NodeId| -> Result<End> {
        match tree.node(node).map(|n| n.kind) {
            Some(NodeKind::Terminal) => Ok(End::Blocked),
            Some(NodeKind::Junction) => {
                Ok(End::Junction(junction_nodes.iter().position(|&n| n == node).unwrap_or_default()))
            }
            None => Err(Error::Config(format!("branch references unknown node {node}"))),
        }
    };

    let mut offset = 0;
    let mut branches = Vec::with_capacity(tree.branches.len());
    for b in &tree.branches {
        let cells = (b.length / cfg.dx).round();
        if !(cells >= 1.0) || (cells * cfg.dx - b.length).abs() > 1e-9 * b.length.max(1.0) {
            return Err(Error::NonDivisibleBranch { branch: b.id, length: b.length, dx: cfg.dx });
        }
        let n_cells = cells as usize;
        let (lo, hi) = tree.ends(b);
        branches.push(BranchCells { branch: b.id, offset, n_cells, dx: cfg.dx, low: end_of(lo)?, high: end_of(hi)? });
        offset += n_cells;
    }
    Ok(Mesh { branches, junction_nodes, n_cells: offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BranchSpec, Node};

    fn t_tree(lengths: [f64; 3]) -> InterconnectTree {
        let [a, b, c] = lengths;
        InterconnectTree::from_specs(
            0,
            vec![
                Node { id: 0, x: 100.0 - a, y: 100.0, kind: NodeKind::Terminal },
                Node { id: 1, x: 100.0, y: 100.0, kind: NodeKind::Junction },
                Node { id: 2, x: 100.0 + b, y: 100.0, kind: NodeKind::Terminal },
                Node { id: 3, x: 100.0, y: 100.0 + c, kind: NodeKind::Terminal },
            ],
            vec![
                BranchSpec { id: 0, from: 0, to: 1, width: 1.0, current_density: 0.0 },
                BranchSpec { id: 1, from: 1, to: 2, width: 1.0, current_density: 0.0 },
                BranchSpec { id: 2, from: 3, to: 1, width: 1.0, current_density: 0.0 },
            ],
        )
    }

    #[test]
    fn single_segment_has_no_junction_unknowns() {
        let tree = InterconnectTree::from_specs(
            0,
            vec![
                Node { id: 0, x: 0.0, y: 5.0, kind: NodeKind::Terminal },
                Node { id: 1, x: 100.0, y: 5.0, kind: NodeKind::Terminal },
            ],
            vec![BranchSpec { id: 0, from: 0, to: 1, width: 1.0, current_density: 1e9 }],
        );
        let m = build_mesh(&tree, &SolverConfig::default()).unwrap();
        assert_eq!(m.n_cells, 100);
        assert_eq!(m.n_unknowns(), 100);
        assert_eq!((m.branches[0].low, m.branches[0].high), (End::Blocked, End::Blocked));
    }

    #[test]
    fn t_tree_counts_and_shared_junction() {
        let m = build_mesh(&t_tree([60.0, 40.0, 50.0]), &SolverConfig::default()).unwrap();
        assert_eq!(m.n_cells, 150);
        assert_eq!(m.n_unknowns(), 151);
        assert_eq!(m.branches[0].high, End::Junction(0));
        assert_eq!(m.branches[1].low, End::Junction(0));
        // vertical branch runs from the junction (low y) up to node 3
        assert_eq!(m.branches[2].low, End::Junction(0));
        assert_eq!(m.branches[2].high, End::Blocked);

        // every global index is owned once, except the shared junction
        let mut owners = vec![0usize; m.n_unknowns()];
        for b in &m.branches {
            for i in b.offset..b.offset + b.n_cells {
                owners[i] += 1;
            }
        }
        assert!(owners[..m.n_cells].iter().all(|&c| c == 1));
        let shared = m.branches.iter().filter(|b| m.unknowns_of(b).any(|i| i == 150)).count();
        assert_eq!(shared, 3);
    }

    #[test]
    fn non_divisible_length_is_rejected() {
        let err = build_mesh(&t_tree([10.5, 40.0, 50.0]), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonDivisibleBranch { branch: 0, .. }), "{err}");
        let half = SolverConfig { dx: 0.5, ..Default::default() };
        assert_eq!(build_mesh(&t_tree([10.5, 40.0, 50.0]), &half).unwrap().n_cells, 201);
    }
}
