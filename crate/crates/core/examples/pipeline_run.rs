//! Runs gen, simulate and dataset into a directory, then evaluates the
//! baseline on the test split.
//!
//! cargo run --release --example pipeline_run -- [out_dir] [n_designs]

use std::path::PathBuf;

use emstress::pipeline::{cmd_dataset, cmd_eval, cmd_gen, cmd_simulate, EvalSplit, PipelineConfig};

fn main() -> emstress::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pipeline_out".into()));
    let mut cfg = PipelineConfig { out_dir: out.clone(), ..Default::default() };
    cfg.gen.n_designs = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);

    let designs = cmd_gen(&cfg)?;
    println!("generated {}", designs.design.len());
    let sim = cmd_simulate(&cfg)?;
    println!("solved {}, failed {}", sim.succeeded, sim.failed.len());
    let ds = cmd_dataset(&cfg)?;
    println!("{} samples, sha256 {}", ds.n_samples, ds.sha256);
    // no prediction directory, so the model column is the baseline itself
    let report = cmd_eval(&ds.path, None, EvalSplit::Test, Some(&out.join("eval")))?;
    print!("{}", report.summary_text());
    Ok(())
}
