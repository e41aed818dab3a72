//! Solves a single blocked segment and compares it with the series solution
//! at each aging year.
//!
//! cargo run --release --example solve_segment -- [length_um] [j_A_per_m2]

use emstress::model::{diffusivity, driving_force_for, BranchSpec, InterconnectTree, Node, NodeKind, PhysicalParams};
use emstress::solver::{solve_transient, AnalyticSegment, SolverConfig, SECONDS_PER_YEAR};

fn main() -> emstress::Result<()> {
    let mut args = std::env::args().skip(1);
    let length: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let j: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5e8);

    let tree = InterconnectTree::from_specs(
        0,
        vec![
            Node { id: 0, x: 20.0, y: 128.0, kind: NodeKind::Terminal },
            Node { id: 1, x: 20.0 + length, y: 128.0, kind: NodeKind::Terminal },
        ],
        vec![BranchSpec { id: 0, from: 0, to: 1, width: 1.0, current_density: j }],
    );
    let p = PhysicalParams::default();
    let years: Vec<f64> = (1..=10).map(f64::from).collect();
    let field = solve_transient(&tree, &p, &SolverConfig::default(), &years)?;

    // solver units: um, Pa/um, um^2/s
    let exact = AnalyticSegment::new(length, driving_force_for(j, &p) * 1e-6, diffusivity(&p) * 1e12, p.sigma_t);
    println!("{:>5} {:>14} {:>14} {:>10}", "year", "sigma(0) Pa", "series Pa", "NRMSE");
    for (ti, &t) in field.times.iter().enumerate() {
        let cells = &field.snapshots[ti].branches[0];
        let truth: Vec<f64> = (0..cells.len()).map(|k| exact.eval(k as f64 + 0.5, t)).collect::<Result<_, _>>()?;
        let mse = cells.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / cells.len() as f64;
        let range = truth[0] - truth[truth.len() - 1];
        println!("{:>5} {:>14.6e} {:>14.6e} {:>10.2e}", t / SECONDS_PER_YEAR, cells[0], truth[0], mse.sqrt() / range.abs());
    }
    Ok(())
}
