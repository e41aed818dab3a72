//! Error metrics over the wire footprint, in physical units.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::FieldImage;

fn paired<'a>(pred: &'a FieldImage, truth: &'a FieldImage) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    if pred.mask != truth.mask {
        return Err(Error::MaskMismatch);
    }
    if truth.mask.count() == 0 {
        return Err(Error::EmptyFootprint);
    }
    Ok(truth.mask.indices().map(|i| (pred.pixels[i] as f64, truth.pixels[i] as f64)))
}

/// Root-mean-square error over the shared footprint.
pub fn rmse(pred: &FieldImage, truth: &FieldImage) -> Result<f64> {
    let (n, sum) = paired(pred, truth)?.fold((0usize, 0.0), |(n, s), (p, t)| (n + 1, s + (p - t) * (p - t)));
    Ok((sum / n as f64).sqrt())
}

/// RMSE divided by the ground-truth range over the footprint.
pub fn nrmse(pred: &FieldImage, truth: &FieldImage) -> Result<f64> {
    let e = rmse(pred, truth)?;
    let (lo, hi) = truth.wire_values().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v as f64), hi.max(v as f64))
    });
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    Ok(e / (hi - lo))
}

/// Predicts the footprint mean of `truth` on every wire pixel.
pub fn baseline_mean_predictor(truth: &FieldImage) -> FieldImage {
    let n = truth.mask.count().max(1) as f64;
    let mean = (truth.wire_values().map(f64::from).sum::<f64>() / n) as f32;
    let mut out = truth.clone();
    for (p, &on) in out.pixels.iter_mut().zip(truth.mask.bits()) {
        *p = if on { mean } else { 0.0 };
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMetrics {
    pub design_id: u64,
    pub time: f64,
    /// Pa
    pub rmse: f64,
    pub nrmse: f64,
    pub baseline_nrmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
    pub min: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Summary {
            mean,
            std: var.sqrt(),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

/// A sample that could not be scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flagged {
    pub design_id: u64,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub samples: Vec<SampleMetrics>,
    pub nrmse: Summary,
    pub rmse: Summary,
    pub baseline: Option<Summary>,
    pub flagged: Vec<Flagged>,
}

pub fn aggregate(samples: Vec<SampleMetrics>, flagged: Vec<Flagged>) -> Result<EvalReport> {
    let n: Vec<f64> = samples.iter().map(|s| s.nrmse).collect();
    let r: Vec<f64> = samples.iter().map(|s| s.rmse).collect();
    let b: Vec<f64> = samples.iter().filter_map(|s| s.baseline_nrmse).collect();
    let nrmse = Summary::of(&n).ok_or_else(|| Error::Config("no samples could be evaluated".into()))?;
    let rmse = Summary::of(&r).expect("same length as nrmse");
    let baseline = if b.len() == samples.len() { Summary::of(&b) } else { None };
    Ok(EvalReport { samples, nrmse, rmse, baseline, flagged })
}

impl EvalReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.samples {
            w.serialize(s).map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let pct = |v: f64| format!("{:.3}%", v * 100.0);
        let _ = writeln!(s, "NRMSE over {} samples ({} flagged)", self.samples.len(), self.flagged.len());
        let header = if self.baseline.is_some() { "  baseline" } else { "" };
        let _ = writeln!(s, "{:<20}{:>10}{header}", "", "model");
        let rows = [
            ("Mean", self.nrmse.mean, self.baseline.map(|b| b.mean)),
            ("Standard Deviation", self.nrmse.std, self.baseline.map(|b| b.std)),
            ("Max", self.nrmse.max, self.baseline.map(|b| b.max)),
            ("Min", self.nrmse.min, self.baseline.map(|b| b.min)),
        ];
        for (label, v, b) in rows {
            let _ = match b {
                Some(b) => writeln!(s, "{label:<20}{:>10}{:>10}", pct(v), pct(b)),
                None => writeln!(s, "{label:<20}{:>10}", pct(v)),
            };
        }
        let _ = writeln!(s, "mean RMSE {:.4e} Pa", self.rmse.mean);
        for f in &self.flagged {
            let _ = writeln!(s, "flagged design {} t={}: {}", f.design_id, f.time, f.reason);
        }
        s
    }

    /// Writes `metrics.csv` and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(Error::io_at(dir))?;
        let csv_path = dir.join("metrics.csv");
        std::fs::write(&csv_path, self.to_csv()?).map_err(Error::io_at(&csv_path))?;
        let txt = dir.join("summary.txt");
        std::fs::write(&txt, self.summary_text()).map_err(Error::io_at(&txt))
    }
}
