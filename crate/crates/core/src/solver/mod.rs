//! Korhonen stress evolution on interconnect trees.
//!
//! The transient solver is a cell-centred finite-volume scheme. Every branch
//! is a 1-D row of cells; every interior junction contributes one shared
//! zero-volume unknown whose row is the width-weighted flux balance. Blocked
//! terminals are zero-flux faces. Internally lengths are in um, so kappa is
//! in um^2/s and G in Pa/um.

mod analytic;
mod fvm;
mod io;
mod mesh;
mod steady;
mod thomas;

pub use analytic::{analytic_single_segment, AnalyticSegment};
pub use fvm::{solve_transient, KorhonenSolver};
pub use io::{decode_stress, encode_stress, read_stress, write_stress, STRESS_MAGIC};
pub use mesh::{build_mesh, BranchCells, End, Mesh};
pub use steady::steady_state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Julian year.
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    BackwardEuler,
    CrankNicolson,
}

impl Integrator {
    /// Implicitness weight of the theta-method.
    pub fn theta(self) -> f64 {
        match self {
            Integrator::BackwardEuler => 1.0,
            Integrator::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Cell size, um.
    pub dx: f64,
    /// First time step, s. Steps grow geometrically by `dt_growth` up to
    /// `dt_max` and stay uniform afterwards.
    pub dt_initial: f64,
    pub dt_max: f64,
    pub dt_growth: f64,
    pub integrator: Integrator,
    /// Relative residual bound accepted from the linear solve.
    pub linear_solver_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dx: 1.0,
            dt_initial: 1e4,
            dt_max: 1e6,
            dt_growth: 2.0,
            integrator: Integrator::BackwardEuler,
            linear_solver_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("solver: {m}")));
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return bad("dx must be positive");
        }
        if !(self.dt_initial.is_finite() && self.dt_initial > 0.0) || !(self.dt_max.is_finite() && self.dt_max > 0.0)
        {
            return bad("time steps must be positive");
        }
        if !(self.dt_growth.is_finite() && self.dt_growth >= 1.0) {
            return bad("dt_growth must be >= 1");
        }
        if !(self.linear_solver_tol > 0.0 && self.linear_solver_tol < 1.0) {
            return bad("linear_solver_tol must lie in (0, 1)");
        }
        Ok(())
    }

    /// Uniform stepping at `dt`.
    pub fn uniform(dt: f64) -> Self {
        SolverConfig { dt_initial: dt, dt_max: dt, dt_growth: 1.0, ..Default::default() }
    }
}
