//! Generates a batch of random designs and prints their size statistics.
//!
//! cargo run --release --example generate_designs -- [n] [seed]

use emstress::gen::{design_seed, generate_tree, GenConfig};
use emstress::model::{validate_tree, PhysicalParams};

fn main() -> emstress::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = GenConfig::default();
    let params = PhysicalParams::default();

    let (mut bmin, mut bmax) = (usize::MAX, 0);
    let (mut jmin, mut jmax) = (f64::INFINITY, 0.0_f64);
    let mut invalid = 0;
    for i in 0..n {
        let tree = generate_tree(design_seed(seed, i), &cfg)?;
        if !validate_tree(&tree, &params).is_empty() {
            invalid += 1;
        }
        bmin = bmin.min(tree.branches.len());
        bmax = bmax.max(tree.branches.len());
        for b in &tree.branches {
            let j = b.current_density.abs();
            if j > 0.0 {
                jmin = jmin.min(j);
            }
            jmax = jmax.max(j);
        }
    }
    println!("designs       {n}");
    println!("invalid       {invalid}");
    println!("branches      {bmin}..={bmax}");
    println!("|j| (nonzero) {jmin:.3e}..={jmax:.3e} A/m^2");
    Ok(())
}
