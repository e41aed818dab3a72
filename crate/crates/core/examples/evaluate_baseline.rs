//! Scores the mean-stress baseline and a deliberately noisy predictor
//! against solved designs and prints both summary tables.
//!
//! cargo run --release --example evaluate_baseline -- [n_designs]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emstress::gen::{design_seed, generate_tree, GenConfig};
use emstress::metrics::{aggregate, baseline_mean_predictor, nrmse, rmse, SampleMetrics};
use emstress::model::{InterconnectTree, PhysicalParams};
use emstress::raster::{rasterize_stress, FieldImage};
use emstress::solver::{solve_transient, SolverConfig};

fn main() -> emstress::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut noisy = Vec::new();
    for id in 0..n {
        let tree = InterconnectTree { design_id: id, ..generate_tree(design_seed(9, id), &GenConfig::default())? };
        let field = solve_transient(&tree, &PhysicalParams::default(), &SolverConfig::default(), &[10.0])?;
        let truth = rasterize_stress(&tree, &field, 10.0)?;
        let spread = truth.wire_values().fold(0.0f32, |m, v| m.max(v.abs())) * 0.05;
        let values: Vec<f32> = truth.wire_values().map(|v| v + rng.random_range(-spread..=spread)).collect();
        let pred = FieldImage::from_wire_values(truth.kind, id, truth.time, truth.mask.clone(), &values)?;
        noisy.push(SampleMetrics {
            design_id: id,
            time: 10.0,
            rmse: rmse(&pred, &truth)?,
            nrmse: nrmse(&pred, &truth)?,
            baseline_nrmse: Some(nrmse(&baseline_mean_predictor(&truth), &truth)?),
        });
    }
    print!("{}", aggregate(noisy, vec![])?.summary_text());
    Ok(())
}
