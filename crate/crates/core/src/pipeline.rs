//! Batch pipeline: `gen -> simulate -> dataset`, evaluation and rendering.
//!
//! Everything lives under `out_dir`:
//!
//! ```text
//! designs/d000000.emtree ...   designs/manifest.toml
//! stress/d000000.emstress ...  stress/manifest.toml
//! dataset/dataset.emds  dataset/dataset.sha256  dataset/split.toml  dataset/manifest.toml
//! ```
//!
//! Manifests embed the resolved configuration. Per-design work runs on a
//! rayon pool of `workers` threads and writes only its own files; the
//! calling thread collects results in design order and writes manifests.
//!
//! Predictions for `eval` are raw little-endian f32 images, 256 x 256
//! row-major in physical units, one file per sample named by
//! [`prediction_path`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gen::{design_seed, generate_tree, GenConfig};
use crate::metrics::{aggregate, baseline_mean_predictor, nrmse, rmse, EvalReport, Flagged, SampleMetrics};
use crate::model::{read_tree, write_tree, InterconnectTree, PhysicalParams};
use crate::raster::{
    rasterize_current, rasterize_stress, split_by_design, write_dataset_bytes, write_png, ChannelKind, DatasetBuilder,
    DatasetReader, FieldImage, Moments, NormStats, Palette, Record, Rendered, SamplePair, Split, N_PIXELS,
};
use crate::solver::{read_stress, solve_transient, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    /// Threads for per-design work; 0 uses all available cores.
    pub workers: usize,
    /// Aging times in years.
    pub report_times: Vec<f64>,
    pub test_fraction: f64,
    pub gen: GenConfig,
    pub solver: SolverConfig,
    pub physics: PhysicalParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            out_dir: PathBuf::from("emstress-out"),
            workers: 0,
            report_times: (1..=10).map(f64::from).collect(),
            test_fraction: 0.15,
            gen: GenConfig::default(),
            solver: SolverConfig::default(),
            physics: PhysicalParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io_at(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        self.solver.validate()?;
        let bad = self.physics.invalid_fields();
        if !bad.is_empty() {
            return Err(Error::Config(format!("physics: out-of-range {}", bad.join(", "))));
        }
        let t = &self.report_times;
        if t.is_empty() || t.iter().any(|v| !(v.is_finite() && *v > 0.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("report_times must be positive, finite and strictly increasing".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.gen.rng_seed
    }

    pub fn designs_dir(&self) -> PathBuf {
        self.out_dir.join("designs")
    }

    pub fn stress_dir(&self) -> PathBuf {
        self.out_dir.join("stress")
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.out_dir.join("dataset")
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset_dir().join("dataset.emds")
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let n = match self.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    pub design_id: u64,
    /// Relative to the manifest's directory.
    pub path: String,
    /// Hex
    pub seed: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignManifest {
    pub config: PipelineConfig,
    #[serde(default)]
    pub design: Vec<DesignEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressEntry {
    pub design_id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressManifest {
    pub config: PipelineConfig,
    #[serde(default)]
    pub design: Vec<StressEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    #[serde(with = "crate::seed::serde_seed")]
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<u64>,
    pub test: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: PipelineConfig,
    pub path: String,
    pub sha256: String,
    pub n_samples: usize,
    pub stats: NormStats,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write-then-rename so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(Error::io_at(&tmp))?;
    fs::rename(&tmp, path).map_err(Error::io_at(path))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    write_atomic(path, text.as_bytes())
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io_at(path))?;
    toml::from_str(&text).map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io_at(dir))
}

pub fn design_file_name(design_id: u64) -> String {
    format!("d{design_id:06}.emtree")
}

pub fn stress_file_name(design_id: u64) -> String {
    format!("d{design_id:06}.emstress")
}

/// Generates `gen.n_designs` trees with ids `0..n` and writes them with a
/// manifest.
pub fn cmd_gen(cfg: &PipelineConfig) -> Result<DesignManifest> {
    cfg.validate()?;
    let dir = cfg.designs_dir();
    create_dir(&dir)?;
    let started = Instant::now();
    let entries: Vec<Result<DesignEntry>> = cfg.pool()?.install(|| {
        (0..cfg.gen.n_designs as u64)
            .into_par_iter()
            .map(|id| {
                let seed = design_seed(cfg.seed(), id);
                let tree = InterconnectTree { design_id: id, ..generate_tree(seed, &cfg.gen)? };
                let text = write_tree(&tree);
                let name = design_file_name(id);
                write_atomic(&dir.join(&name), text.as_bytes())?;
                Ok(DesignEntry { design_id: id, path: name, seed: format!("{seed:#018x}"), sha256: sha256_hex(text.as_bytes()) })
            })
            .collect()
    });
    let manifest = DesignManifest { config: cfg.clone(), design: entries.into_iter().collect::<Result<_>>()? };
    write_toml(&dir.join("manifest.toml"), &manifest)?;
    log::info!("generated {} designs in {:.2?}", manifest.design.len(), started.elapsed());
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub succeeded: usize,
    /// `(design_id, message)`
    pub failed: Vec<(u64, String)>,
}

/// Solves every design listed in the design manifest. A failing design is
/// recorded in the stress manifest and the rest of the batch continues.
pub fn cmd_simulate(cfg: &PipelineConfig) -> Result<BatchOutcome> {
    cfg.validate()?;
    let designs: DesignManifest = read_toml(&cfg.designs_dir().join("manifest.toml"))?;
    let (src, dst) = (cfg.designs_dir(), cfg.stress_dir());
    create_dir(&dst)?;
    let started = Instant::now();
    let entries: Vec<StressEntry> = cfg.pool()?.install(|| {
        designs
            .design
            .par_iter()
            .map(|d| {
                let t0 = Instant::now();
                let result = simulate_one(cfg, &src.join(&d.path), &dst, d.design_id);
                let ms = t0.elapsed().as_secs_f64() * 1e3;
                match result {
                    Ok((path, sha256)) => {
                        log::info!("design {}: solved in {ms:.1} ms", d.design_id);
                        StressEntry { design_id: d.design_id, path: Some(path), sha256: Some(sha256), error: None }
                    }
                    Err(e) => {
                        log::error!("design {}: {e} (after {ms:.1} ms)", d.design_id);
                        StressEntry { design_id: d.design_id, path: None, sha256: None, error: Some(e.to_string()) }
                    }
                }
            })
            .collect()
    });
    let failed: Vec<(u64, String)> =
        entries.iter().filter_map(|e| e.error.as_ref().map(|m| (e.design_id, m.clone()))).collect();
    let outcome = BatchOutcome { succeeded: entries.len() - failed.len(), failed };
    write_toml(&dst.join("manifest.toml"), &StressManifest { config: cfg.clone(), design: entries })?;
    log::info!(
        "simulated {} designs ({} failed) in {:.2?}",
        outcome.succeeded + outcome.failed.len(),
        outcome.failed.len(),
        started.elapsed()
    );
    Ok(outcome)
}

fn simulate_one(cfg: &PipelineConfig, tree_path: &Path, dst: &Path, design_id: u64) -> Result<(String, String)> {
    let tree = read_tree(tree_path)?;
    if tree.design_id != design_id {
        return Err(Error::Corrupt(format!("{} holds design {}", tree_path.display(), tree.design_id)));
    }
    let field = solve_transient(&tree, &cfg.physics, &cfg.solver, &cfg.report_times)?;
    let name = stress_file_name(design_id);
    let bytes = crate::solver::encode_stress(&field);
    write_atomic(&dst.join(&name), &bytes)?;
    Ok((name, sha256_hex(&bytes)))
}

/// Rasterized samples of one design, encoded, with per-sample moments.
struct DesignSamples {
    builder: DatasetBuilder,
    moments: Vec<(Moments, Moments, f64)>,
}

fn design_samples(cfg: &PipelineConfig, tree: &InterconnectTree, stress_path: &Path, split: Split) -> Result<DesignSamples> {
    let field = read_stress(stress_path)?;
    let input = rasterize_current(tree)?;
    let current_moments = Moments::of(input.wire_values().map(f64::from));
    let mut builder = DatasetBuilder::new();
    let mut moments = Vec::new();
    for &t in &cfg.report_times {
        let target = rasterize_stress(tree, &field, t)?;
        let stress_moments = Moments::of(target.wire_values().map(f64::from));
        let pair = SamplePair::new(input.clone(), target, t)?;
        builder.push(&Record { split, pair })?;
        moments.push((current_moments, stress_moments, t));
    }
    Ok(DesignSamples { builder, moments })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOutcome {
    pub path: PathBuf,
    pub sha256: String,
    pub n_samples: usize,
    pub stats: NormStats,
    pub split: SplitManifest,
}

/// Rasterizes every successfully simulated design at every report time,
/// splits by design, fits statistics on the training side and writes the
/// container, its digest, the split and a manifest.
pub fn cmd_dataset(cfg: &PipelineConfig) -> Result<DatasetOutcome> {
    cfg.validate()?;
    let designs: DesignManifest = read_toml(&cfg.designs_dir().join("manifest.toml"))?;
    let stress: StressManifest = read_toml(&cfg.stress_dir().join("manifest.toml"))?;
    let tree_paths: BTreeMap<u64, PathBuf> =
        designs.design.iter().map(|d| (d.design_id, cfg.designs_dir().join(&d.path))).collect();
    let mut ready: Vec<(u64, PathBuf, PathBuf)> = Vec::new();
    for e in &stress.design {
        match (&e.path, tree_paths.get(&e.design_id)) {
            (Some(p), Some(tree)) => ready.push((e.design_id, tree.clone(), cfg.stress_dir().join(p))),
            (None, _) => log::warn!("design {}: no stress field, left out of the dataset", e.design_id),
            (Some(_), None) => log::warn!("design {}: not in the design manifest, left out", e.design_id),
        }
    }
    ready.sort_by_key(|r| r.0);
    let ids: Vec<u64> = ready.iter().map(|r| r.0).collect();
    if ids.len() < 2 {
        return Err(Error::Config(format!("a dataset needs at least 2 simulated designs, found {}", ids.len())));
    }
    let (train, test) = split_by_design(&ids, cfg.test_fraction, cfg.seed());
    let is_test: std::collections::BTreeSet<u64> = test.iter().copied().collect();

    let started = Instant::now();
    let per_design: Vec<Result<DesignSamples>> = cfg.pool()?.install(|| {
        ready
            .par_iter()
            .map(|(id, tree_path, stress_path)| {
                let tree = read_tree(tree_path)?;
                let split = if is_test.contains(id) { Split::Test } else { Split::Train };
                design_samples(cfg, &tree, stress_path, split)
            })
            .collect()
    });

    let mut builder = DatasetBuilder::new();
    let (mut current, mut stress_m, mut time) = (Moments::default(), Moments::default(), Moments::default());
    for ((id, _, _), samples) in ready.iter().zip(per_design) {
        let samples = samples?;
        if !is_test.contains(id) {
            for (c, s, t) in &samples.moments {
                current.merge(c);
                stress_m.merge(s);
                time.push(*t);
            }
        }
        builder.append(samples.builder);
    }
    let stats = NormStats::from_moments(&current, &stress_m, &time)?;
    let n_samples = builder.len();
    let bytes = builder.finish(&stats);

    let dir = cfg.dataset_dir();
    create_dir(&dir)?;
    let path = cfg.dataset_path();
    let digest = hex::encode(write_dataset_bytes(&path, &bytes)?);
    let sha256 = sha256_hex(&bytes);
    write_atomic(&dir.join("dataset.sha256"), format!("{sha256}  dataset.emds\n").as_bytes())?;
    let split = SplitManifest { seed: cfg.seed(), test_fraction: cfg.test_fraction, train, test };
    write_toml(&dir.join("split.toml"), &split)?;
    write_toml(
        &dir.join("manifest.toml"),
        &DatasetManifest { config: cfg.clone(), path: "dataset.emds".into(), sha256: sha256.clone(), n_samples, stats },
    )?;
    log::info!("dataset: {n_samples} samples, trailer {digest}, built in {:.2?}", started.elapsed());
    Ok(DatasetOutcome { path, sha256, n_samples, stats, split })
}

/// `<dir>/d<design_id:06>_t<years>.f32`, e.g. `d000012_t3.f32`.
pub fn prediction_path(dir: &Path, design_id: u64, years: f64) -> PathBuf {
    dir.join(format!("d{design_id:06}_t{years}.f32"))
}

pub fn write_prediction(dir: &Path, img: &FieldImage) -> Result<PathBuf> {
    let years = img.time.ok_or_else(|| Error::Config("predictions are stress images with a time".into()))?;
    let path = prediction_path(dir, img.design_id, years);
    let bytes: Vec<u8> = img.pixels.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&path, bytes).map_err(Error::io_at(&path))?;
    Ok(path)
}

/// Reads a prediction and attaches the ground-truth footprint. Nonzero
/// values outside it are a mask mismatch.
pub fn read_prediction(path: &Path, truth: &FieldImage) -> Result<FieldImage> {
    let bytes = fs::read(path).map_err(Error::io_at(path))?;
    if bytes.len() != N_PIXELS * 4 {
        return Err(Error::Corrupt(format!("{}: {} bytes, expected {}", path.display(), bytes.len(), N_PIXELS * 4)));
    }
    let pixels: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    if pixels.iter().zip(truth.mask.bits()).any(|(&v, &on)| !on && v != 0.0) {
        return Err(Error::MaskMismatch);
    }
    Ok(FieldImage { pixels, mask: truth.mask.clone(), ..truth.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Train,
    Test,
    All,
}

impl std::str::FromStr for EvalSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(EvalSplit::Train),
            "test" => Ok(EvalSplit::Test),
            "all" => Ok(EvalSplit::All),
            other => Err(Error::Config(format!("unknown split `{other}` (train, test, all)"))),
        }
    }
}

/// Scores predictions in `pred_dir` (or the mean baseline when `None`)
/// against the dataset targets of `split`. Unscorable samples are flagged
/// and skipped. The report is written to `out` when given.
pub fn cmd_eval(dataset: &Path, pred_dir: Option<&Path>, split: EvalSplit, out: Option<&Path>) -> Result<EvalReport> {
    let reader = DatasetReader::open(dataset)?;
    type Scored = std::result::Result<SampleMetrics, Flagged>;
    let results: Vec<Result<Option<Scored>>> = (0..reader.len())
        .into_par_iter()
        .map(|i| {
            let rec = reader.record(i)?;
            let wanted = match split {
                EvalSplit::All => true,
                EvalSplit::Train => rec.split == Split::Train,
                EvalSplit::Test => rec.split == Split::Test,
            };
            Ok(wanted.then(|| score(&rec, pred_dir)))
        })
        .collect();
    let mut samples = Vec::new();
    let mut flagged = Vec::new();
    for r in results {
        match r? {
            None => {}
            Some(Ok(s)) => samples.push(s),
            Some(Err(f)) => {
                log::warn!("design {} t={}: {}", f.design_id, f.time, f.reason);
                flagged.push(f);
            }
        }
    }
    let report = aggregate(samples, flagged)?;
    if let Some(out) = out {
        report.write(out)?;
    }
    Ok(report)
}

fn score(rec: &Record, pred_dir: Option<&Path>) -> std::result::Result<SampleMetrics, Flagged> {
    let truth = &rec.pair.target;
    let flag = |e: Error| Flagged { design_id: rec.pair.design_id, time: rec.pair.time, reason: e.to_string() };
    let baseline = baseline_mean_predictor(truth);
    let pred = match pred_dir {
        Some(dir) => read_prediction(&prediction_path(dir, rec.pair.design_id, rec.pair.time), truth).map_err(flag)?,
        None => baseline.clone(),
    };
    Ok(SampleMetrics {
        design_id: rec.pair.design_id,
        time: rec.pair.time,
        rmse: rmse(&pred, truth).map_err(flag)?,
        nrmse: nrmse(&pred, truth).map_err(flag)?,
        baseline_nrmse: Some(nrmse(&baseline, truth).map_err(flag)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenderSource {
    /// Current image of a tree file.
    Current { tree: PathBuf },
    /// Stress of a tree at `years` from an `EMSTRESS` file.
    Stress { tree: PathBuf, field: PathBuf, years: f64 },
    /// One channel of a dataset sample, in physical units.
    Dataset { path: PathBuf, design_id: u64, years: f64, channel: ChannelKind },
}

pub fn load_image(source: &RenderSource) -> Result<FieldImage> {
    match source {
        RenderSource::Current { tree } => rasterize_current(&read_tree(tree)?),
        RenderSource::Stress { tree, field, years } => rasterize_stress(&read_tree(tree)?, &read_stress(field)?, *years),
        RenderSource::Dataset { path, design_id, years, channel } => {
            let rec = DatasetReader::open(path)?
                .get(*design_id, *years)?
                .ok_or_else(|| Error::Config(format!("dataset has no sample for design {design_id} at {years} y")))?;
            Ok(match channel {
                ChannelKind::Current => rec.pair.input,
                ChannelKind::Stress => rec.pair.target,
            })
        }
    }
}

/// Renders to `out` (PNG) plus `out.minmax`.
pub fn cmd_render(source: &RenderSource, palette: Palette, out: &Path) -> Result<Rendered> {
    let img = load_image(source)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_png(&img, palette, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path, n: usize) -> PipelineConfig {
        let mut cfg = PipelineConfig { out_dir: dir.to_path_buf(), workers: 2, ..Default::default() };
        cfg.gen.n_designs = n;
        cfg.gen.branch_count_range = [5, 12];
        cfg.gen.rng_seed = 11;
        cfg.report_times = vec![1.0, 2.0, 3.0];
        cfg
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let mut big = cfg.clone();
        big.gen.rng_seed = u64::MAX;
        assert_eq!(PipelineConfig::from_toml(&big.to_toml()).unwrap(), big);
        assert!(matches!(PipelineConfig::from_toml("workers = 2\nbogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_toml("test_fraction = 1.0\n"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_toml("report_times = [3.0, 2.0]\n"), Err(Error::Config(_))));
        let partial = PipelineConfig::from_toml("[gen]\nn_designs = 3\nrng_seed = \"0x10\"\n[physics]\ntemperature = 400.0\n").unwrap();
        assert_eq!((partial.gen.n_designs, partial.gen.rng_seed, partial.physics.temperature), (3, 16, 400.0));
    }

    #[test]
    fn gen_writes_files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), 3);
        let m = cmd_gen(&cfg).unwrap();
        assert_eq!(m.design.len(), 3);
        for d in &m.design {
            assert!(cfg.designs_dir().join(&d.path).exists());
        }
        let back: DesignManifest = read_toml(&cfg.designs_dir().join("manifest.toml")).unwrap();
        assert_eq!(back, m);
        assert_eq!(cmd_gen(&cfg).unwrap(), m);
    }

    #[test]
    fn empty_simulate_is_a_noop() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), 0);
        cmd_gen(&cfg).unwrap();
        assert_eq!(cmd_simulate(&cfg).unwrap(), BatchOutcome { succeeded: 0, failed: vec![] });
    }

    #[test]
    fn bad_design_is_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), 3);
        let m = cmd_gen(&cfg).unwrap();
        fs::write(cfg.designs_dir().join(&m.design[1].path), "EMTREE v1\nDESIGN 1\nNODE 0 0 0 terminal\n").unwrap();
        let out = cmd_simulate(&cfg).unwrap();
        assert_eq!(out.succeeded, 2);
        assert_eq!(out.failed.len(), 1);
        assert_eq!(out.failed[0].0, 1);
        let ds = cmd_dataset(&cfg).unwrap();
        assert_eq!(ds.n_samples, 2 * 3);
    }

    #[test]
    fn dataset_stats_match_fit_on_train_split() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), 6);
        cmd_gen(&cfg).unwrap();
        cmd_simulate(&cfg).unwrap();
        let out = cmd_dataset(&cfg).unwrap();
        assert_eq!(out.n_samples, 18);
        assert_eq!((out.split.train.len(), out.split.test.len()), (5, 1));
        let ds = crate::raster::read_dataset(&out.path).unwrap();
        let train: Vec<SamplePair> = ds.records.iter().filter(|r| r.split == Split::Train).map(|r| r.pair.clone()).collect();
        assert_eq!(NormStats::fit(&train).unwrap(), ds.stats);
        let text = fs::read_to_string(cfg.dataset_dir().join("dataset.sha256")).unwrap();
        assert!(text.starts_with(&out.sha256));
    }

    #[test]
    fn eval_perfect_baseline_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), 4);
        cmd_gen(&cfg).unwrap();
        cmd_simulate(&cfg).unwrap();
        let ds = cmd_dataset(&cfg).unwrap();
        let preds = dir.path().join("pred");
        fs::create_dir_all(&preds).unwrap();
        let reader = DatasetReader::open(&ds.path).unwrap();
        for i in 0..reader.len() {
            write_prediction(&preds, &reader.record(i).unwrap().pair.target).unwrap();
        }
        let perfect = cmd_eval(&ds.path, Some(&preds), EvalSplit::All, None).unwrap();
        assert_eq!(perfect.samples.len(), 12);
        assert!(perfect.samples.iter().all(|s| s.nrmse == 0.0));

        let base = cmd_eval(&ds.path, None, EvalSplit::Test, Some(&dir.path().join("eval"))).unwrap();
        assert_eq!(base.samples.len(), 3);
        assert!(base.nrmse.mean > 0.0);
        assert!(dir.path().join("eval/metrics.csv").exists() && dir.path().join("eval/summary.txt").exists());

        // put metal where the footprint has none
        let first = reader.record(0).unwrap().pair.target;
        let mut bad = first.clone();
        let outside = first.mask.bits().iter().position(|&b| !b).unwrap();
        bad.pixels[outside] = 1.0;
        write_prediction(&preds, &bad).unwrap();
        let r = cmd_eval(&ds.path, Some(&preds), EvalSplit::All, None).unwrap();
        assert_eq!(r.samples.len(), 11);
        assert_eq!(r.flagged.len(), 1);
        assert_eq!((r.flagged[0].design_id, r.flagged[0].time), (first.design_id, first.time.unwrap()));
    }

    #[test]
    fn render_is_pure() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path(), 2);
        let m = cmd_gen(&cfg).unwrap();
        cmd_simulate(&cfg).unwrap();
        let src = RenderSource::Stress {
            tree: cfg.designs_dir().join(&m.design[0].path),
            field: cfg.stress_dir().join(stress_file_name(0)),
            years: 2.0,
        };
        let a = cmd_render(&src, Palette::Diverging, &dir.path().join("a.png")).unwrap();
        let b = cmd_render(&src, Palette::Diverging, &dir.path().join("b.png")).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read(dir.path().join("a.png")).unwrap(), fs::read(dir.path().join("b.png")).unwrap());
        assert!(dir.path().join("a.png.minmax").exists());
    }
}
