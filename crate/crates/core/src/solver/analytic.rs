//! Closed-form stress in a single segment blocked at both ends.
//!
//! With constant G and uniform initial stress, separation of variables gives
//!
//! ```text
//! sigma(x, t) = sigma_T + G (L/2 - x)
//!             - sum_{k odd} 4 G L / (k pi)^2 cos(k pi x / L) exp(-kappa (k pi / L)^2 t)
//! ```
//!
//! Any consistent unit system works (e.g. um, Pa/um, um^2/s).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSegment {
    pub length: f64,
    pub g: f64,
    pub kappa: f64,
    pub sigma_t: f64,
    /// Truncate once the next term's amplitude drops below `tol` times
    /// max(|partial sum|, |G| L / 2).
    pub tol: f64,
    pub max_terms: usize,
}

impl AnalyticSegment {
    pub fn new(length: f64, g: f64, kappa: f64, sigma_t: f64) -> Self {
        AnalyticSegment { length, g, kappa, sigma_t, tol: 1e-6, max_terms: 100_000 }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        AnalyticSegment { tol, ..self }
    }

    pub fn steady(&self, x: f64) -> f64 {
        self.sigma_t + self.g * (self.length / 2.0 - x)
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        let l = self.length;
        let mut value = self.steady(x);
        if self.g == 0.0 {
            return Ok(value);
        }
        let floor = self.g.abs() * l / 2.0;
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        for term in 0..self.max_terms {
            let k = (2 * term + 1) as f64;
            let amplitude = 4.0 * self.g * l / (k * k * pi2) * (-self.kappa * k * k * pi2 / (l * l) * t).exp();
            if amplitude.abs() < self.tol * value.abs().max(floor) {
                return Ok(value);
            }
            value -= amplitude * cos_pi(k * x / l);
        }
        Err(Error::NonConvergence(self.max_terms))
    }
}

/// cos(pi r), exact at multiples of 1/2.
fn cos_pi(r: f64) -> f64 {
    let r = r.rem_euclid(2.0);
    if r == 0.5 || r == 1.5 {
        0.0
    } else if r == 0.0 {
        1.0
    } else if r == 1.0 {
        -1.0
    } else {
        (std::f64::consts::PI * r).cos()
    }
}

/// Series solution at default truncation (1e-6 relative, 1e5 terms).
pub fn analytic_single_segment(length: f64, g: f64, kappa: f64, sigma_t: f64, x: f64, t: f64) -> Result<f64> {
    AnalyticSegment::new(length, g, kappa, sigma_t).eval(x, t)
}
