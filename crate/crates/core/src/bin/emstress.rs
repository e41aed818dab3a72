use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use emstress::pipeline::{cmd_dataset, cmd_eval, cmd_gen, cmd_render, cmd_simulate, EvalSplit, PipelineConfig, RenderSource};
use emstress::raster::{ChannelKind, Palette};
use emstress::seed::parse_seed;
use emstress::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Electromigration stress pipeline.
///
/// Logging is controlled by EMSTRESS_LOG (error, warn, info, debug).
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Pipeline config (TOML). Defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed, decimal or 0x-hex. Overrides gen.rng_seed.
    #[arg(long, global = true, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory. Overrides out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random designs.
    Gen,
    /// Solve every generated design.
    Simulate,
    /// Rasterize solved designs into an EMDS dataset.
    Dataset,
    /// Score predictions (or the mean baseline) against a dataset.
    Eval {
        /// Defaults to the pipeline's dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Directory of d<id>_t<years>.f32 predictions; baseline if omitted.
        #[arg(long)]
        pred_dir: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: EvalSplit,
        /// Report directory; defaults to <out>/eval.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render a current or stress image as PNG with a min/max sidecar.
    Render {
        /// EMTREE file.
        #[arg(long, conflicts_with = "dataset")]
        tree: Option<PathBuf>,
        /// EMSTRESS file for `tree`; renders current density if omitted.
        #[arg(long, requires = "tree")]
        field: Option<PathBuf>,
        #[arg(long, requires = "design")]
        dataset: Option<PathBuf>,
        #[arg(long)]
        design: Option<u64>,
        /// Years.
        #[arg(long)]
        time: Option<f64>,
        /// current or stress (dataset samples only).
        #[arg(long, default_value = "stress")]
        channel: String,
        /// gray or diverging.
        #[arg(long, default_value = "diverging")]
        palette: Palette,
        /// Output PNG path.
        #[arg(long)]
        image: PathBuf,
    },
}

fn config(cli: &Cli) -> emstress::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.gen.rng_seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn render_source(
    tree: Option<PathBuf>,
    field: Option<PathBuf>,
    dataset: Option<PathBuf>,
    design: Option<u64>,
    time: Option<f64>,
    channel: &str,
) -> emstress::Result<RenderSource> {
    let need_time = || time.ok_or_else(|| Error::Config("--time is required for stress images".into()));
    match (tree, field, dataset, design) {
        (Some(tree), None, None, _) => Ok(RenderSource::Current { tree }),
        (Some(tree), Some(field), None, _) => Ok(RenderSource::Stress { tree, field, years: need_time()? }),
        (None, None, Some(path), Some(design_id)) => {
            let channel = match channel {
                "current" => ChannelKind::Current,
                "stress" => ChannelKind::Stress,
                other => return Err(Error::Config(format!("unknown channel `{other}` (current, stress)"))),
            };
            Ok(RenderSource::Dataset { path, design_id, years: need_time()?, channel })
        }
        _ => Err(Error::Config("render needs --tree [--field --time] or --dataset --design --time".into())),
    }
}

fn run(cli: Cli) -> emstress::Result<u8> {
    let cfg = config(&cli)?;
    match cli.command {
        Command::Gen => {
            let m = cmd_gen(&cfg)?;
            println!("{} designs in {}", m.design.len(), cfg.designs_dir().display());
        }
        Command::Simulate => {
            let out = cmd_simulate(&cfg)?;
            println!("{} solved, {} failed", out.succeeded, out.failed.len());
            for (id, msg) in &out.failed {
                eprintln!("design {id}: {msg}");
            }
            if !out.failed.is_empty() {
                return Ok(EXIT_PARTIAL);
            }
        }
        Command::Dataset => {
            let out = cmd_dataset(&cfg)?;
            println!("{} samples -> {}", out.n_samples, out.path.display());
            println!("sha256 {}", out.sha256);
        }
        Command::Eval { dataset, pred_dir, split, report } => {
            let dataset = dataset.unwrap_or_else(|| cfg.dataset_path());
            let report_dir = report.unwrap_or_else(|| cfg.out_dir.join("eval"));
            let r = cmd_eval(&dataset, pred_dir.as_deref(), split, Some(&report_dir))?;
            print!("{}", r.summary_text());
        }
        Command::Render { tree, field, dataset, design, time, channel, palette, image } => {
            let src = render_source(tree, field, dataset, design, time, &channel)?;
            let r = cmd_render(&src, palette, &image)?;
            println!("{} (min {:e}, max {:e})", image.display(), r.min, r.max);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EMSTRESS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            })
        }
    }
}
