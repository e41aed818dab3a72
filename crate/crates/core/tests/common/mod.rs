#![allow(dead_code)]

use emstress::gen::{design_seed, generate_tree, GenConfig};
use emstress::model::{BranchSpec, InterconnectTree, Node, NodeKind, StressField};

/// Straight horizontal segment at y = 128 starting at x = 20.
pub fn segment(length: f64, j: f64) -> InterconnectTree {
    InterconnectTree::from_specs(
        1,
        vec![
            Node { id: 0, x: 20.0, y: 128.0, kind: NodeKind::Terminal },
            Node { id: 1, x: 20.0 + length, y: 128.0, kind: NodeKind::Terminal },
        ],
        vec![BranchSpec { id: 0, from: 0, to: 1, width: 1.0, current_density: j }],
    )
}

/// Three-branch T (60 um left arm, 40 um right arm, 50 um stem) with
/// currents that satisfy KCL.
pub fn t_tree(j: f64) -> InterconnectTree {
    InterconnectTree::from_specs(
        2,
        vec![
            Node { id: 0, x: 40.0, y: 100.0, kind: NodeKind::Terminal },
            Node { id: 1, x: 100.0, y: 100.0, kind: NodeKind::Junction },
            Node { id: 2, x: 140.0, y: 100.0, kind: NodeKind::Terminal },
            Node { id: 3, x: 100.0, y: 150.0, kind: NodeKind::Terminal },
        ],
        vec![
            BranchSpec { id: 0, from: 0, to: 1, width: 2.0, current_density: j },
            BranchSpec { id: 1, from: 1, to: 2, width: 1.0, current_density: 0.5 * j },
            BranchSpec { id: 2, from: 1, to: 3, width: 3.0, current_density: 0.5 * j },
        ],
    )
}

pub fn random_designs(run_seed: u64, n: u64) -> Vec<InterconnectTree> {
    let cfg = GenConfig::default();
    (0..n)
        .map(|i| InterconnectTree { design_id: i, ..generate_tree(design_seed(run_seed, i), &cfg).unwrap() })
        .collect()
}

/// RMSE of `pred - truth` over the range of `truth`.
pub fn nrmse(pred: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / truth.len() as f64;
    let lo = truth.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    mse.sqrt() / (hi - lo)
}

/// All cell values of one snapshot, branch after branch.
pub fn cells(field: &StressField, time_idx: usize) -> Vec<f64> {
    field.snapshots[time_idx].branches.iter().flatten().copied().collect()
}

/// Total stress content in Pa um^3 with compensated summation:
/// sum over branches of w t_metal dx sum(sigma).
pub fn content(tree: &InterconnectTree, field: &StressField, time_idx: usize, t_metal: f64) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (k, values) in field.snapshots[time_idx].branches.iter().enumerate() {
        let b = tree.branches.iter().find(|b| b.id == field.branch_ids[k]).unwrap();
        let dx = b.length / values.len() as f64;
        for v in values {
            let term = v * b.width * t_metal * dx - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
        }
    }
    sum
}

/// Brute-force raster: for every pixel centre, the lowest-id branch whose
/// rectangle contains it. Rectangles are rebuilt from node coordinates.
/// `None` marks pixels without metal.
pub fn brute_force_current(tree: &InterconnectTree) -> Vec<Option<f32>> {
    let mut branches: Vec<_> = tree.branches.iter().collect();
    branches.sort_by_key(|b| b.id);
    let rects: Vec<(f64, f64, f64, f64, f32)> = branches
        .iter()
        .map(|b| {
            let p = tree.nodes.iter().find(|n| n.id == b.from).unwrap();
            let q = tree.nodes.iter().find(|n| n.id == b.to).unwrap();
            let off = ((b.width - 1.0) / 2.0).floor();
            if p.y == q.y {
                (p.x.min(q.x), p.x.max(q.x), p.y - off, p.y - off + b.width, b.current_density as f32)
            } else {
                (p.x - off, p.x - off + b.width, p.y.min(q.y), p.y.max(q.y), b.current_density as f32)
            }
        })
        .collect();
    let mut out = vec![None; 256 * 256];
    for y in 0..256 {
        for x in 0..256 {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            if let Some(r) = rects.iter().find(|r| r.0 <= cx && cx < r.1 && r.2 <= cy && cy < r.3) {
                out[y * 256 + x] = Some(r.4);
            }
        }
    }
    out
}
