use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{driving_force, validate_tree, InterconnectTree, NodeId, PhysicalParams, StressField, StressSnapshot};

use super::mesh::build_mesh;
use super::SolverConfig;

/// Long-time limit of the stress field, sampled on the solver's cells.
///
/// At steady state every flux vanishes, so each branch is linear with slope
/// -G and stress is continuous through junctions. The one free constant is
/// fixed by conservation of total content, sum(w L sigma_T). This is solved
/// directly by walking the tree, independent of the time stepper.
pub fn steady_state(tree: &InterconnectTree, params: &PhysicalParams, cfg: &SolverConfig) -> Result<StressField> {
    let structural: Vec<_> = validate_tree(tree, params).into_iter().filter(|v| v.kind.is_structural()).collect();
    if !structural.is_empty() {
        return Err(Error::InvalidTree(structural));
    }
    let mesh = build_mesh(tree, cfg)?;
    let slopes: Vec<f64> = tree.branches.iter().map(|b| driving_force(b, params) * 1e-6).collect();
    let ends: Vec<(NodeId, NodeId)> = tree.branches.iter().map(|b| tree.ends(b)).collect();

    // Stress at every node up to the additive constant.
    let incidence = tree.incidence();
    let mut potential: BTreeMap<NodeId, f64> = BTreeMap::new();
    let root = tree.nodes[0].id;
    potential.insert(root, 0.0);
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        let here = potential[&n];
        for &bi in &incidence[&n] {
            let (lo, hi) = ends[bi];
            let drop = slopes[bi] * tree.branches[bi].length;
            let (other, value) = if lo == n { (hi, here - drop) } else { (lo, here + drop) };
            if let std::collections::btree_map::Entry::Vacant(e) = potential.entry(other) {
                e.insert(value);
                stack.push(other);
            }
        }
    }

    let mut volume = 0.0;
    let mut content = 0.0;
    for (bi, b) in tree.branches.iter().enumerate() {
        let l = b.length;
        volume += b.width * l;
        content += b.width * (l * potential[&ends[bi].0] - slopes[bi] * l * l / 2.0);
    }
    let offset = params.sigma_t - content / volume;

    let branches = mesh
        .branches
        .iter()
        .enumerate()
        .map(|(bi, cells)| {
            let start = potential[&ends[bi].0] + offset;
            (0..cells.n_cells).map(|k| start - slopes[bi] * (k as f64 + 0.5) * cells.dx).collect()
        })
        .collect();
    let junctions = mesh.junction_nodes.iter().map(|n| potential[n] + offset).collect();

    Ok(StressField {
        design_id: tree.design_id,
        times: vec![f64::INFINITY],
        branch_ids: mesh.branches.iter().map(|b| b.branch).collect(),
        junction_ids: mesh.junction_nodes.clone(),
        snapshots: vec![StressSnapshot { branches, junctions }],
    })
}
