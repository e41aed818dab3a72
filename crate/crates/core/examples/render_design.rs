//! Generates one design, solves it, and renders the current and year-10
//! stress images as PNGs (each with a .minmax sidecar).
//!
//! cargo run --release --example render_design -- [out_dir] [seed]

use std::path::PathBuf;

use emstress::gen::{design_seed, generate_tree, GenConfig};
use emstress::model::PhysicalParams;
use emstress::raster::{rasterize_current, rasterize_stress, write_png, Palette};
use emstress::solver::{solve_transient, SolverConfig};

fn main() -> emstress::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "render_out".into()));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    std::fs::create_dir_all(&out)?;

    let tree = generate_tree(design_seed(seed, 0), &GenConfig::default())?;
    let field = solve_transient(&tree, &PhysicalParams::default(), &SolverConfig::default(), &[10.0])?;

    let current = rasterize_current(&tree)?;
    let stress = rasterize_stress(&tree, &field, 10.0)?;
    println!("{} branches, {} wire pixels", tree.branches.len(), current.mask.count());
    for (name, img, palette) in [("current.png", &current, Palette::Diverging), ("stress.png", &stress, Palette::Gray)] {
        let path = out.join(name);
        let r = write_png(img, palette, &path)?;
        println!("{}: min {:.3e} max {:.3e}", path.display(), r.min, r.max);
    }
    Ok(())
}
