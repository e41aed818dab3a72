use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    IoAt {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported {format} version `{found}`")]
    Version { format: &'static str, found: String },

    #[error("invalid tree ({} violation(s)); first: {}", .0.len(), .0[0])]
    InvalidTree(Vec<Violation>),

    #[error("branch {branch}: length {length} um is not a multiple of dx = {dx} um")]
    NonDivisibleBranch { branch: u32, length: f64, dx: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("design placement failed for seed {seed:#018x} after {attempts} attempts")]
    Placement { seed: u64, attempts: usize },

    #[error("stress field has no snapshot at t = {0} s")]
    MissingTime(f64),

    #[error("geometry is not aligned to the 1 um pixel grid: {0}")]
    OffGrid(String),

    #[error("zero variance in {0} statistics")]
    ZeroVariance(&'static str),

    #[error("checksum mismatch")]
    Checksum,

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("footprint masks differ")]
    MaskMismatch,

    #[error("footprint of branch {0} leaves the raster canvas")]
    OutsideCanvas(u32),

    #[error("empty footprint")]
    EmptyFootprint,

    #[error("degenerate ground-truth stress range")]
    DegenerateRange,

    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),

    #[error("dataset is locked by another writer: {0}")]
    Locked(PathBuf),
}

impl Error {
    pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::IoAt { path, source }
    }
}
