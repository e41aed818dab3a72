//! Writes a small T-shaped tree in the text format, parses it back and
//! validates it. A second copy with unbalanced currents shows a KCL report.
//!
//! cargo run --example tree_format

use emstress::model::{parse_tree, validate_tree, write_tree, BranchSpec, InterconnectTree, Node, NodeKind, PhysicalParams};

fn t_tree(stem_j: f64) -> InterconnectTree {
    let node = |id, x, y, kind| Node { id, x, y, kind };
    InterconnectTree::from_specs(
        1,
        vec![
            node(0, 40.0, 100.0, NodeKind::Terminal),
            node(1, 100.0, 100.0, NodeKind::Junction),
            node(2, 140.0, 100.0, NodeKind::Terminal),
            node(3, 100.0, 150.0, NodeKind::Terminal),
        ],
        vec![
            BranchSpec { id: 0, from: 0, to: 1, width: 2.0, current_density: 1e9 },
            BranchSpec { id: 1, from: 1, to: 2, width: 1.0, current_density: 5e8 },
            BranchSpec { id: 2, from: 1, to: 3, width: 3.0, current_density: stem_j },
        ],
    )
}

fn main() -> emstress::Result<()> {
    let params = PhysicalParams::default();
    let text = write_tree(&t_tree(5e8));
    print!("{text}");
    let parsed = parse_tree(&text)?;
    println!("roundtrip stable: {}", write_tree(&parsed) == text);
    println!("violations: {}", validate_tree(&parsed, &params).len());

    for v in validate_tree(&t_tree(1e9), &params) {
        println!("unbalanced: {v}");
    }
    Ok(())
}
